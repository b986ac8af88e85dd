"""Linear RC network assembly (MNA with fixed-voltage sources folded into the RHS)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GND = "gnd"
GMIN = 1e-12


@dataclass
class Network:
    """Nodes with capacitance matrix C, conductance matrix G and constant injections s.

    Resistors to a fixed potential (``add_res_to``) contribute to G and s.  An optional
    ideal stimulus source reaches node index 0 through conductance ``gsrc``.
    """

    names: list[str] = field(default_factory=list)
    _c: list[tuple[int, int, float]] = field(default_factory=list)
    _g: list[tuple[int, int, float]] = field(default_factory=list)
    _s: list[tuple[int, float]] = field(default_factory=list)
    gsrc: float = 0.0
    slow_threshold_ohm: float = 1e5

    def node(self, name: str) -> int:
        if name not in self.names:
            self.names.append(name)
        return self.names.index(name)

    def idx(self, name: str) -> int:
        return -1 if name == GND else self.names.index(name)

    def add_cap(self, a: str, b: str, c: float) -> None:
        if c < 0:
            raise ValueError(f"negative capacitance between {a} and {b}")
        if c > 0:
            self._c.append((self.node(a), -1 if b == GND else self.node(b), c))

    def add_res(self, a: str, b: str, r: float) -> None:
        if not r > 0:
            raise ValueError(f"resistance between {a} and {b} must be positive, got {r}")
        self._g.append((self.node(a), -1 if b == GND else self.node(b), 1.0 / r))

    def add_res_to(self, a: str, r: float, v: float) -> None:
        """Resistor from node ``a`` to an ideal potential ``v``."""
        self.add_res(a, GND, r)
        self._s.append((self.node(a), v / r))

    def set_source(self, name: str, r: float) -> None:
        """Stimulus source drives ``name`` through ``r``; the node must be the first one created."""
        if self.node(name) != 0:
            raise ValueError("the stimulus node must be network node 0")
        self.gsrc = 1.0 / r

    @property
    def n(self) -> int:
        return len(self.names)

    @staticmethod
    def _stamp(n: int, items, min_g: float | None = None) -> np.ndarray:
        m = np.zeros((n, n))
        for a, b, g in items:
            m[a, a] += g
            if b >= 0:
                m[b, b] += g
                m[a, b] -= g
                m[b, a] -= g
        return m

    def matrices(self, include_slow: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        C = self._stamp(n, self._c)
        gs = self._g if include_slow else [x for x in self._g if 1.0 / x[2] < self.slow_threshold_ohm]
        G = self._stamp(n, gs)
        s = np.zeros(n)
        for a, i in self._s:
            s[a] += i
        if self.gsrc:
            G[0, 0] += self.gsrc
        return C, G, s

    def node_cap(self, name: str) -> float:
        """Total capacitance attached to ``name`` (to ground and to other nodes)."""
        i = self.idx(name)
        return sum(c for a, b, c in self._c if i in (a, b))
