import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Tuple, Sequence, Any, Union, List

import numpy as np

from core.errors import LabError

Exponent = Tuple[int, ...]
Number = Union[complex, float, int]


@dataclass(frozen=True)
class Poly:
    """
    Плотный многочлен от нескольких комплексных переменных.

    Хранится как отображение вектор показателей -> комплексный коэффициент.
    Нулевые коэффициенты не хранятся.
    """
    variables: Tuple[str, ...]
    terms: Dict[Exponent, complex] = field(default_factory=dict)

    def __post_init__(self):
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise LabError("arity", f"repeated variable names: {variables}")
        cleaned = {}
        for exp, coeff in dict(self.terms).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(variables) or any(e < 0 for e in exp):
                raise LabError("arity", f"exponent {exp} does not fit variables {variables}")
            coeff = complex(coeff)
            if coeff != 0:
                cleaned[exp] = cleaned.get(exp, 0) + coeff
        cleaned = {exp: c for exp, c in cleaned.items() if c != 0}
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "terms", cleaned)

    # Конструкторы

    @classmethod
    def constant(cls, variables: Sequence[str], value: Number) -> 'Poly':
        return cls(tuple(variables), {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> 'Poly':
        variables = tuple(variables)
        if name not in variables:
            raise LabError("arity", f"unknown variable {name}")
        exp = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exp: 1.0})

    @classmethod
    def monomial(cls, variables: Sequence[str], exp: Exponent, coeff: Number = 1.0) -> 'Poly':
        return cls(tuple(variables), {tuple(exp): coeff})

    @classmethod
    def zero(cls, variables: Sequence[str]) -> 'Poly':
        return cls(tuple(variables), {})

    # Свойства

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        """Максимальная полная степень; -1 для нулевого многочлена"""
        if not self.terms:
            return -1
        return max(sum(exp) for exp in self.terms)

    def degree_in(self, var: str) -> int:
        i = self._index(var)
        if not self.terms:
            return -1
        return max(exp[i] for exp in self.terms)

    def is_homogeneous(self) -> bool:
        return len({sum(exp) for exp in self.terms}) <= 1

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def _index(self, var: str) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise LabError("arity", f"variable {var} is not one of {self.variables}")

    def _check_compatible(self, other: 'Poly'):
        if self.variables != other.variables:
            raise LabError("arity", f"variable mismatch: {self.variables} vs {other.variables}")

    # Арифметика

    def _coerce(self, other) -> 'Poly':
        if isinstance(other, Poly):
            self._check_compatible(other)
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Poly.constant(self.variables, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            terms[exp] = terms.get(exp, 0) + c
        return Poly(self.variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.variables, {exp: -c for exp, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: Dict[Exponent, complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, 0) + c1 * c2
        return Poly(self.variables, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise LabError("arity", "negative powers are not polynomials")
        result = Poly.constant(self.variables, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, factor: Number) -> 'Poly':
        return Poly(self.variables, {exp: c * factor for exp, c in self.terms.items()})

    def chop(self, tol: float) -> 'Poly':
        """Отбрасывает коэффициенты с |c| ≤ tol·max|c|"""
        scale = self.max_abs_coeff()
        return Poly(self.variables, {e: c for e, c in self.terms.items() if abs(c) > tol * scale})

    # Вычисление

    @cached_property
    def _horner_tree(self):
        return _build_horner(self.terms, self.nvars)

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)) and self.nvars != 1:
            point = tuple(point[0])
        return eval_poly(self, point)

    # Преобразования

    def partial(self, var: str) -> 'Poly':
        return partial_derivative(self, var)

    def coefficients_in(self, var: str) -> List['Poly']:
        """
        Коэффициенты многочлена как многочлена от var.

        Returns:
            Список: элемент k: коэффициент при var^k (многочлен от остальных переменных)
        """
        i = self._index(var)
        rest = tuple(v for v in self.variables if v != var)
        deg = self.degree_in(var)
        buckets: List[Dict[Exponent, complex]] = [dict() for _ in range(max(deg, 0) + 1)]
        for exp, c in self.terms.items():
            buckets[exp[i]][exp[:i] + exp[i + 1:]] = c
        return [Poly(rest, b) for b in buckets]

    def rename(self, variables: Sequence[str]) -> 'Poly':
        if len(variables) != self.nvars:
            raise LabError("arity", "rename must keep the variable count")
        return Poly(tuple(variables), self.terms)

    def extend(self, variables: Sequence[str]) -> 'Poly':
        """Переносит многочлен в больший набор переменных"""
        variables = tuple(variables)
        idx = [variables.index(v) for v in self.variables]
        terms = {}
        for exp, c in self.terms.items():
            new = [0] * len(variables)
            for i, e in zip(idx, exp):
                new[i] = e
            terms[tuple(new)] = c
        return Poly(variables, terms)

    def substitute(self, mapping: Dict[str, 'Poly'], variables: Sequence[str]) -> 'Poly':
        """
        Подставляет многочлены вместо переменных.

        Args:
            mapping: переменная -> многочлен от variables (все переменные self должны быть покрыты)
            variables: переменные результата
        """
        variables = tuple(variables)
        result = Poly.zero(variables)
        images = [mapping[v] for v in self.variables]
        power_cache: Dict[Tuple[int, int], Poly] = {}
        for exp, c in self.terms.items():
            term = Poly.constant(variables, c)
            for i, e in enumerate(exp):
                if e:
                    key = (i, e)
                    if key not in power_cache:
                        power_cache[key] = images[i] ** e
                    term = term * power_cache[key]
            result = result + term
        return result

    def homogeneous_part(self, degree: int) -> 'Poly':
        return Poly(self.variables, {e: c for e, c in self.terms.items() if sum(e) == degree})

    def truncate(self, degree: int) -> 'Poly':
        """Члены полной степени не выше degree"""
        return Poly(self.variables, {e: c for e, c in self.terms.items() if sum(e) <= degree})

    # Сериализация

    def to_dict(self) -> Dict[str, Any]:
        """Словарь формата {"vars": [...], "terms": [{"exp": [...], "re": .., "im": ..}]}"""
        return {
            "vars": list(self.variables),
            "terms": [
                {"exp": list(exp), "re": c.real, "im": c.imag}
                for exp, c in sorted(self.terms.items())
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Poly':
        terms = {}
        for t in data.get("terms", []):
            exp = tuple(t["exp"])
            terms[exp] = terms.get(exp, 0) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(tuple(data["vars"]), terms)

    @classmethod
    def from_json(cls, text: str) -> 'Poly':
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        if not self.terms:
            return f"Poly({self.variables}, 0)"
        parts = []
        for exp, c in sorted(self.terms.items(), key=lambda t: (-sum(t[0]), t[0])):
            mono = "*".join(
                v if e == 1 else f"{v}^{e}" for v, e in zip(self.variables, exp) if e
            )
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _build_horner(terms: Dict[Exponent, complex], nvars: int):
    """Дерево Горнера: по первой переменной список коэффициентов-поддеревьев"""
    if nvars == 0:
        return sum(terms.values(), 0j)
    groups: Dict[int, Dict[Exponent, complex]] = {}
    for exp, c in terms.items():
        groups.setdefault(exp[0], {})[exp[1:]] = c
    if not groups:
        return []
    deg = max(groups)
    return [_build_horner(groups[k], nvars - 1) if k in groups else None for k in range(deg + 1)]


def _eval_horner(tree, point: Sequence):
    if not isinstance(tree, list):
        return tree
    if not tree:
        return 0j
    x = point[0]
    rest = point[1:]
    acc = 0j
    for node in reversed(tree):
        acc = acc * x
        if node is not None:
            acc = acc + _eval_horner(node, rest)
    return acc


def eval_poly(p: Poly, x: Sequence) -> Any:
    """
    Вычисляет многочлен в точке схемой Горнера.

    Координаты могут быть массивами numpy одинаковой формы: тогда вычисление
    векторизовано по точкам.
    """
    if len(x) != p.nvars:
        raise LabError("arity", f"expected {p.nvars} coordinates, got {len(x)}")
    coords = [np.asarray(c, dtype=complex) if isinstance(c, np.ndarray) else complex(c) for c in x]
    value = _eval_horner(p._horner_tree, coords)
    if isinstance(value, np.ndarray):
        return value
    return complex(value)


def partial_derivative(p: Poly, var: str) -> Poly:
    """Формальная частная производная по переменной var"""
    i = p._index(var)
    terms = {}
    for exp, c in p.terms.items():
        if exp[i] == 0:
            continue
        new = list(exp)
        new[i] -= 1
        terms[tuple(new)] = c * exp[i]
    return Poly(p.variables, terms)
