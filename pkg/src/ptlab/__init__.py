"""Point counts of hyperplane sections of hypersurfaces over finite fields."""
from .field import Field, field_make
from .forms import DiagonalForm, HomogeneousForm, parse_form

__all__ = ["Field", "field_make", "DiagonalForm", "HomogeneousForm", "parse_form"]
