"""RetinaGrade - diabetic retinopathy grading pipeline."""

__version__ = "0.1.0"
