# Инициализационный файл для модуля algebra
from .poly import Poly, eval_poly, partial_derivative
from .elimination import Elimination, eliminate, resultant_eliminate, univariate_roots
from .newton import newton_polish, complex_point

__all__ = [
    'Poly',
    'eval_poly',
    'partial_derivative',
    'Elimination',
    'eliminate',
    'resultant_eliminate',
    'univariate_roots',
    'newton_polish',
    'complex_point'
]
