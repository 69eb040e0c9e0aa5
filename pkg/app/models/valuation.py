"""
Módulo de modelos de valoración
Modelos de datos para la distribución de valoraciones privadas y la ley de pagos
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from app.exceptions import DomainError

PROBABILITY_TOLERANCE = 1e-12

UNIFORM = 'uniform'
DISCRETE = 'discrete-grid'


@dataclass(frozen=True)
class ValuationDistribution:
    """Ley F(v) de las valoraciones privadas por periodo (uniforme o rejilla discreta)"""
    kind: str
    support_low: float
    support_high: float
    atoms: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if self.kind not in (UNIFORM, DISCRETE):
            raise DomainError(f"Tipo de distribución no soportado: {self.kind}")
        if not (math.isfinite(self.support_low) and math.isfinite(self.support_high)):
            raise DomainError('El soporte debe ser finito')
        if self.support_low < 0:
            raise DomainError(f'El soporte debe ser no negativo, se recibió v_low={self.support_low}')
        if self.support_high < self.support_low:
            raise DomainError('El extremo superior del soporte debe ser >= que el inferior')

        if self.kind == DISCRETE:
            if not self.atoms:
                raise DomainError('Una rejilla discreta necesita al menos un átomo')
            total = 0.0
            for value, prob in self.atoms:
                if prob < 0:
                    raise DomainError(f'Probabilidad negativa en el átomo {value}')
                if value < self.support_low - PROBABILITY_TOLERANCE or value > self.support_high + PROBABILITY_TOLERANCE:
                    raise DomainError(f'El átomo {value} está fuera del soporte')
                total += prob
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                raise DomainError(f'Las probabilidades deben sumar 1, suman {total!r}')

    @classmethod
    def uniform(cls, low: float, high: float) -> 'ValuationDistribution':
        """Crear una distribución uniforme en [low, high]"""
        return cls(UNIFORM, float(low), float(high))

    @classmethod
    def discrete(cls, atoms: Iterable[Sequence[float]],
                 low: Optional[float] = None,
                 high: Optional[float] = None) -> 'ValuationDistribution':
        """
        Crear una rejilla discreta a partir de pares (valor, probabilidad)

        Los valores repetidos se fusionan y los átomos se ordenan por valor.
        """
        merged: Dict[float, float] = {}
        for value, prob in atoms:
            merged[float(value)] = merged.get(float(value), 0.0) + float(prob)
        if not merged:
            raise DomainError('Una rejilla discreta necesita al menos un átomo')
        ordered = tuple(sorted(merged.items()))
        support_low = ordered[0][0] if low is None else float(low)
        support_high = ordered[-1][0] if high is None else float(high)
        return cls(DISCRETE, support_low, support_high, ordered)

    @classmethod
    def from_dict(cls, spec: Dict) -> 'ValuationDistribution':
        """Construir la distribución desde la sección `distribution` del escenario"""
        kind = spec.get('kind')
        if kind == UNIFORM:
            return cls.uniform(spec['low'], spec['high'])
        if kind in ('discrete', DISCRETE):
            return cls.discrete(spec['atoms'], spec.get('low'), spec.get('high'))
        raise DomainError(f"Tipo de distribución no soportado: {kind}")

    @property
    def is_degenerate(self) -> bool:
        """Verdadero si toda la masa está en un único valor"""
        if self.kind == UNIFORM:
            return self.support_high == self.support_low
        return sum(1 for _, prob in self.atoms if prob > 0) == 1

    @property
    def is_continuous(self) -> bool:
        return self.kind == UNIFORM and not self.is_degenerate

    @property
    def width(self) -> float:
        return self.support_high - self.support_low

    @property
    def values(self) -> np.ndarray:
        """Valores de los átomos con probabilidad positiva (la uniforme degenerada es un átomo)"""
        if self.kind == UNIFORM:
            return np.array([self.support_low])
        return np.array([value for value, prob in self.atoms if prob > 0])

    @property
    def probabilities(self) -> np.ndarray:
        if self.kind == UNIFORM:
            return np.array([1.0])
        return np.array([prob for _, prob in self.atoms if prob > 0])

    def cdf(self, x):
        """Función de distribución F(x)"""
        x = np.asarray(x, dtype=float)
        if self.is_continuous:
            return np.clip((x - self.support_low) / self.width, 0.0, 1.0)
        cumulative = np.cumsum(self.probabilities)
        index = np.searchsorted(self.values, x, side='right')
        return np.where(index > 0, cumulative[np.maximum(index - 1, 0)], 0.0)

    def pdf(self, x):
        """Densidad f(x), solo para la uniforme no degenerada"""
        if not self.is_continuous:
            raise DomainError('La densidad solo existe para distribuciones continuas')
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support_low) & (x <= self.support_high)
        return np.where(inside, 1.0 / self.width, 0.0)

    def to_dict(self):
        """Convertir a diccionario"""
        data = {
            'kind': self.kind,
            'low': self.support_low,
            'high': self.support_high,
        }
        if self.atoms is not None:
            data['atoms'] = [[value, prob] for value, prob in self.atoms]
        return data


@dataclass(frozen=True)
class PaymentLaw:
    """
    Ley del pago total B_t de una subasta de segundo precio con reserva v_low

    B_t es el segundo estadístico de orden de n valoraciones. Para la uniforme
    es v_low + (v_high - v_low)·Beta(n-1, 2); para rejillas discretas se guarda
    la función de masa exacta.
    """
    n: int
    low: float
    high: float
    values: Optional[np.ndarray] = field(default=None, compare=False)
    probabilities: Optional[np.ndarray] = field(default=None, compare=False)

    @property
    def is_discrete(self) -> bool:
        return self.values is not None

    @property
    def _shape(self) -> Tuple[float, float]:
        return float(self.n - 1), 2.0

    @property
    def mean(self) -> float:
        if self.is_discrete:
            return float(np.dot(self.values, self.probabilities))
        a, b = self._shape
        return self.low + (self.high - self.low) * a / (a + b)

    def pmf(self) -> Dict[float, float]:
        """Función de masa exacta (solo leyes discretas)"""
        if not self.is_discrete:
            raise DomainError('La ley continua no tiene función de masa')
        return {float(v): float(p) for v, p in zip(self.values, self.probabilities)}

    def pdf(self, x):
        if self.is_discrete:
            raise DomainError('La ley discreta no tiene densidad')
        width = self.high - self.low
        a, b = self._shape
        return stats.beta.pdf((np.asarray(x, dtype=float) - self.low) / width, a, b) / width

    def cdf(self, x, strict: bool = False):
        """P(B <= x), o P(B < x) con strict=True"""
        x = np.asarray(x, dtype=float)
        if self.is_discrete:
            cumulative = np.concatenate(([0.0], np.cumsum(self.probabilities)))
            side = 'left' if strict else 'right'
            return cumulative[np.searchsorted(self.values, x, side=side)]
        a, b = self._shape
        return stats.beta.cdf((x - self.low) / (self.high - self.low), a, b)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.is_discrete:
            return rng.choice(self.values, size=size, p=self.probabilities)
        a, b = self._shape
        return self.low + (self.high - self.low) * rng.beta(a, b, size=size)

    def expect(self, func: Callable, breakpoints: Iterable[float] = ()) -> float:
        """
        Esperanza E[func(B)]

        Suma exacta sobre los átomos, o cuadratura adaptativa (scipy.integrate.quad)
        partida en los puntos de quiebre del integrando.
        """
        if self.is_discrete:
            return float(np.dot(self.probabilities, np.asarray(func(self.values), dtype=float)))
        points = sorted(p for p in breakpoints if self.low < p < self.high)
        value, _ = integrate.quad(
            lambda x: float(func(x)) * float(self.pdf(x)),
            self.low, self.high,
            points=points or None,
            epsabs=1e-13, epsrel=1e-12, limit=200
        )
        return float(value)

    def expected_shortfall(self, z):
        """E[(z - B)^+] en forma cerrada, vectorizado en z"""
        z = np.asarray(z, dtype=float)
        if self.is_discrete:
            gaps = np.maximum(np.subtract.outer(z, self.values), 0.0)
            return gaps @ self.probabilities
        width = self.high - self.low
        a, b = self._shape
        u = np.clip((z - self.low) / width, 0.0, 1.0)
        inner = u * stats.beta.cdf(u, a, b) - a / (a + b) * stats.beta.cdf(u, a + 1.0, b)
        return width * inner + np.maximum(z - self.high, 0.0)

    def to_dict(self):
        """Convertir a diccionario"""
        data = {'n': self.n, 'low': self.low, 'high': self.high, 'mean': self.mean}
        if self.is_discrete:
            data['pmf'] = [[float(v), float(p)] for v, p in zip(self.values, self.probabilities)]
        return data


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Estimación Monte Carlo con su error estándar"""
    mean: float
    standard_error: float
    paths: int

    @classmethod
    def from_samples(cls, samples) -> 'MonteCarloEstimate':
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            raise DomainError('No hay muestras para estimar')
        # np.sum usa suma por pares, el resultado no depende del orden de los lotes
        mean = float(np.sum(samples) / samples.size)
        if samples.size > 1:
            se = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
        else:
            se = 0.0
        return cls(mean, se, int(samples.size))

    def within(self, target: float, sigmas: float = 3.0, floor: float = 1e-12) -> bool:
        """Verdadero si |media - objetivo| <= sigmas·SE (con un piso numérico)"""
        return abs(self.mean - target) <= sigmas * self.standard_error + floor

    def to_dict(self):
        """Convertir a diccionario"""
        return {'mean': self.mean, 'standard_error': self.standard_error, 'paths': self.paths}
