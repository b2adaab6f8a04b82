"""Command-line interface for RetinaGrade."""
