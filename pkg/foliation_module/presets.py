from typing import Dict, Any, Tuple

import numpy as np

from core.errors import LabError
from core.logging import get_logger
from algebra_module import Poly
from foliation_module.foliation_form import (
    AFFINE, HOMOGENEOUS, FoliationForm, homogenize, make_foliation
)
from utils.worker_pool import make_rng

logger = get_logger()

PRESETS = ("linear", "jouanolou", "random")


def linear_preset(lam: complex) -> FoliationForm:
    """Линейная модель zdw − λwdz: (alpha, beta) = (−λw, z)"""
    z, w = Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")
    alpha = w * (-complex(lam))
    beta = z
    return make_foliation(*homogenize(alpha, beta), name=f"linear({complex(lam):g})")


def jouanolou_preset(d: int) -> FoliationForm:
    """Пример Жуанолу: ż = w^d − z^{d+1}, ẇ = 1 − z^d w"""
    if d < 2:
        raise LabError("config", f"jouanolou requires d >= 2, got {d}")
    z, w = Poly.variable(AFFINE, "z"), Poly.variable(AFFINE, "w")
    alpha = -(1 - z ** d * w)
    beta = w ** d - z ** (d + 1)
    return make_foliation(*homogenize(alpha, beta), name=f"jouanolou({d})")


def _random_homogeneous(degree: int, rng: np.random.Generator) -> Poly:
    terms = {}
    for i in range(degree, -1, -1):
        for j in range(degree - i, -1, -1):
            re, im = rng.standard_normal(2)
            terms[(i, j, degree - i - j)] = complex(re, im)
    return Poly(HOMOGENEOUS, terms)


def random_preset(d: int, seed: int) -> FoliationForm:
    """
    Случайное слоение степени d.

    a = x × V для случайного однородного поля V степени d с независимыми
    стандартными комплексными гауссовыми коэффициентами; условие Эйлера
    выполнено тождественно.
    """
    if d < 1:
        raise LabError("config", f"random preset requires d >= 1, got {d}")
    rng = make_rng(seed)
    v1, v2, v3 = (_random_homogeneous(d, rng) for _ in range(3))
    x1, x2, x3 = (Poly.variable(HOMOGENEOUS, v) for v in HOMOGENEOUS)
    a1 = x2 * v3 - x3 * v2
    a2 = x3 * v1 - x1 * v3
    a3 = x1 * v2 - x2 * v1
    return make_foliation(a1, a2, a3, name=f"random({d},{seed})")


def parse_complex(text: str) -> complex:
    """Комплексное число из "re,im", "re" или записи Python ("1+2j", "i")"""
    text = text.strip().replace("−", "-")
    if "," in text:
        re, im = text.split(",", 1)
        return complex(float(re), float(im))
    if text in ("i", "+i"):
        return 1j
    if text == "-i":
        return -1j
    try:
        return complex(text.replace("i", "j"))
    except ValueError:
        raise LabError("config", f"cannot parse complex number '{text}'")


def parse_preset(spec: str) -> Tuple[str, Dict[str, Any]]:
    """
    Разбирает строку пресета: "linear:0,1", "jouanolou:2", "random:2:7".
    """
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "linear":
            return name, {"lam": parse_complex(rest or "i")}
        if name == "jouanolou":
            return name, {"d": int(rest or 2)}
        if name == "random":
            d, _, seed = rest.partition(":")
            return name, {"d": int(d or 2), "seed": int(seed or 0)}
    except ValueError:
        raise LabError("config", f"cannot parse preset parameters '{spec}'")
    raise LabError("config", f"unknown preset '{name}'; valid presets: {list(PRESETS)}")


def preset(name: str, **params) -> FoliationForm:
    """Строит слоение по имени пресета"""
    if ":" in name and not params:
        name, params = parse_preset(name)
    if name == "linear":
        return linear_preset(params.get("lam", 1j))
    if name == "jouanolou":
        return jouanolou_preset(int(params.get("d", 2)))
    if name == "random":
        return random_preset(int(params.get("d", 2)), int(params.get("seed", 0)))
    raise LabError("config", f"unknown preset '{name}'; valid presets: {list(PRESETS)}")
