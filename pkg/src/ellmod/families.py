"""Static data for the three marginal families P8, X9 and J10.

Each family is f(x) + sigma*x0*x1*x2 for a quasi-homogeneous f of degree 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as Fr


class UnknownFamily(KeyError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    name: str
    mu: int
    # exponent vectors of the normal form f (the sigma*x0x1x2 term is implicit)
    normal_form: tuple[tuple[int, int, int], ...]
    weights: tuple[Fr, Fr, Fr]
    # Milnor-ring basis: index -> exponent vector (index -1 is x0x1x2, 0 is 1)
    monomials: dict[int, tuple[int, int, int]]
    # res x0x1x2 d^3x / (f_x0 f_x1 f_x2) = residue_scale / (27 + sigma^3)
    residue_scale: Fr
    # pi_B carries 3*period_multiplier/Lambda in front of the log
    period_multiplier: int
    # printed q is e^{2 pi i tau / uniformizer_hint}
    uniformizer_hint: int
    orbifold_weights: tuple[int, ...]
    # A-model classes: name -> degree, and the Poincare pairing on the twisted sectors
    class_degrees: dict[str, Fr] = field(default_factory=dict)
    pairing: dict[tuple[str, str], Fr] = field(default_factory=dict)

    def weight(self, mono) -> Fr:
        return sum((w * k for w, k in zip(self.weights, mono)), Fr(0))

    @property
    def degrees(self) -> dict[int, Fr]:
        """d_i = 1 - weight(phi_i), the degree of the flat coordinate t_i."""
        return {i: 1 - self.weight(m) for i, m in self.monomials.items()}

    def involution(self, i: int) -> int:
        """The index i' with (phi_i, phi_i') != 0 in the standard P8 ordering."""
        if self.name != "P8":
            raise NotImplementedError("explicit involution is only tabulated for P8")
        return {-1: 0, 0: -1}.get(i, 7 - i)

    def residue_constant(self):
        """(numerator, denominator) coefficient lists in sigma."""
        return [self.residue_scale], [27, 0, 0, 1]

    def pairing_matrix(self):
        """Poincare pairing on (1, P, twisted classes) as a nested dict."""
        names = ["1", "P", *self.class_degrees]
        mat = {a: {b: Fr(0) for b in names} for a in names}
        mat["1"]["P"] = mat["P"]["1"] = Fr(1)
        for (a, b), v in self.pairing.items():
            mat[a][b] = v
            mat[b][a] = v
        return names, mat


def _p8() -> FamilySpec:
    mons = {-1: (1, 1, 1), 0: (0, 0, 0), 1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1),
            4: (1, 1, 0), 5: (1, 0, 1), 6: (0, 1, 1)}
    deg = {f"D{i}": Fr(1, 3) if i <= 3 else Fr(2, 3) for i in range(1, 7)}
    pair = {(f"D{i}", f"D{7 - i}"): Fr(1, 3) for i in range(1, 4)}
    return FamilySpec("P8", 8, ((3, 0, 0), (0, 3, 0), (0, 0, 3)),
                      (Fr(1, 3), Fr(1, 3), Fr(1, 3)), mons, Fr(1), 1, 3, (3, 3, 3),
                      deg, pair)


def _x9() -> FamilySpec:
    mons = {-1: (1, 1, 1), 0: (0, 0, 0), 1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1),
            4: (0, 2, 0), 5: (1, 1, 0), 6: (1, 0, 1), 7: (0, 1, 1)}
    deg = {}
    for i in (1, 2):
        for k in (1, 2, 3):
            deg[f"D{i}{k}"] = Fr(k, 4)
    deg["D31"] = Fr(1, 2)
    pair = {}
    for i in (1, 2):
        pair[(f"D{i}1", f"D{i}3")] = Fr(1, 4)
        pair[(f"D{i}2", f"D{i}2")] = Fr(1, 4)
    pair[("D31", "D31")] = Fr(1, 2)
    return FamilySpec("X9", 9, ((2, 0, 1), (1, 3, 0), (0, 0, 2)),
                      (Fr(1, 4), Fr(1, 4), Fr(1, 2)), mons, Fr(9, 4), 3, 4, (4, 4, 2),
                      deg, pair)


def _j10() -> FamilySpec:
    mons = {-1: (1, 1, 1), 0: (0, 0, 0), 1: (1, 0, 0), 2: (2, 0, 0), 3: (0, 1, 0),
            4: (3, 0, 0), 5: (1, 1, 0), 6: (4, 0, 0), 7: (0, 2, 0), 8: (5, 0, 0)}
    deg = {f"D1{i}": Fr(i, 6) for i in range(1, 6)}
    deg.update({"D21": Fr(1, 3), "D22": Fr(2, 3), "D31": Fr(1, 2)})
    pair = {(f"D1{i}", f"D1{6 - i}"): Fr(1, 6) for i in range(1, 4)}
    pair[("D21", "D22")] = Fr(1, 3)
    pair[("D31", "D31")] = Fr(1, 2)
    return FamilySpec("J10", 10, ((3, 0, 1), (0, 3, 0), (0, 0, 2)),
                      (Fr(1, 6), Fr(1, 3), Fr(1, 2)), mons, Fr(3, 2), 3, 6, (6, 3, 2),
                      deg, pair)


FAMILIES = {"P8": _p8(), "X9": _x9(), "J10": _j10()}


def get_family(name) -> FamilySpec:
    if isinstance(name, FamilySpec):
        return name
    key = str(name).upper()
    if key not in FAMILIES:
        raise UnknownFamily(name)
    return FAMILIES[key]
