"""
Módulo de modelos de la extensión con esfuerzo
Modelo de dos periodos con esfuerzo observable no contratable y apropiación indebida
"""
from dataclasses import dataclass, field
from typing import List, Optional

import pandas as pd

from app.exceptions import DomainError
from app.models.valuation import ValuationDistribution

EXTENSION_COLUMNS = ['c', 'dollar_utility', 'token_utility', 'sigma_star', 'expected_alpha']


@dataclass(frozen=True)
class TwoPeriodConfig:
    """Configuración del modelo de dos periodos (T=2, R=1, M1=1)"""
    beta: float = 0.9
    c: float = 0.0
    distribution: ValuationDistribution = field(
        default_factory=lambda: ValuationDistribution.uniform(1.0, 2.0)
    )
    n: int = 2
    sigma_grid_points: int = 201

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise DomainError('beta debe estar en (0, 1]')
        if self.c < 0:
            raise DomainError('El costo de apropiación c debe ser no negativo')
        if self.n < 2:
            raise DomainError('El modelo requiere n >= 2 postores')
        if self.distribution.support_low <= 0:
            raise DomainError('La extensión requiere v_low > 0 para que sigma_bar sea finito')
        if self.sigma_grid_points < 3:
            raise DomainError('La rejilla de sigma necesita al menos 3 puntos')

    @property
    def horizon(self) -> int:
        return 2

    @property
    def initial_stock(self) -> float:
        return 1.0

    def with_c(self, c: float) -> 'TwoPeriodConfig':
        return TwoPeriodConfig(self.beta, c, self.distribution, self.n, self.sigma_grid_points)

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'beta': self.beta,
            'c': self.c,
            'distribution': self.distribution.to_dict(),
            'n': self.n
        }


@dataclass(frozen=True)
class ContractSpec:
    """
    Título contingente del régimen en dólares

    y2(rev) = min(rev, base) + penalty·1[rev < threshold]; y1 es el pago del
    periodo 1 al subastador. Con y1=None el contrato se valora a precio justo.
    """
    base: float = 0.0
    penalty: float = 0.0
    threshold: float = 0.0
    y1: Optional[float] = None

    def __post_init__(self):
        if self.base < 0 or self.penalty < 0:
            raise DomainError('base y penalty deben ser no negativos')

    @property
    def maximum_payment(self) -> float:
        """Máximo de y2 sobre todos los estados"""
        return max(self.base, min(self.threshold, self.base) + self.penalty)

    def respects_cap(self, c: float, tolerance: float = 1e-12) -> bool:
        return self.maximum_payment <= c + tolerance

    def priced(self, y1: float) -> 'ContractSpec':
        return ContractSpec(self.base, self.penalty, self.threshold, y1)

    def to_dict(self):
        """Convertir a diccionario"""
        return {'y1': self.y1, 'base': self.base, 'penalty': self.penalty, 'threshold': self.threshold}


@dataclass
class TokenPeriodTwo:
    """Equilibrio del periodo 2 con tokens dado alpha"""
    effort: float
    expected_price: float
    investor_value: float

    def to_dict(self):
        """Convertir a diccionario"""
        return {'effort': self.effort, 'expected_price': self.expected_price,
                'investor_value': self.investor_value}


@dataclass
class SigmaOptimum:
    """Resultado de optimizar sigma en el régimen con tokens"""
    sigma: float
    utility: float
    expected_alpha: float
    sigma_bar: float
    boundary_utility: float
    interior: bool
    diagnostic: Optional[str] = None

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'sigma': self.sigma,
            'utility': self.utility,
            'expected_alpha': self.expected_alpha,
            'sigma_bar': self.sigma_bar,
            'boundary_utility': self.boundary_utility,
            'interior': self.interior,
            'diagnostic': self.diagnostic
        }


@dataclass
class DollarRegimeResult:
    """Esfuerzo, utilidad del subastador y pago neto del inversionista en dólares"""
    effort: float
    utility: float
    investor_payoff: float
    contract: Optional[ContractSpec] = None

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'effort': self.effort,
            'utility': self.utility,
            'investor_payoff': self.investor_payoff,
            'contract': None if self.contract is None else self.contract.to_dict()
        }


@dataclass
class RegimeComparison:
    """Barrido en c de la comparación dólares vs. tokens"""
    rows: List[dict]
    token_optimum: SigmaOptimum
    crossing_c: Optional[float]
    note: str = ('El contrato óptimo se busca en la familia (base, penalización bajo umbral); '
                 'el valor en dólares es una cota inferior. Los inversores no descuentan y el costo '
                 'del esfuerzo se descuenta con beta, así que el contrato puede inducir un esfuerzo '
                 'mayor que 1 (hasta 1/beta) y superar la utilidad de primer óptimo.')

    @property
    def tokens_preferred_at_zero(self) -> bool:
        first = self.rows[0]
        return first['c'] == 0 and first['token_utility'] > first['dollar_utility']

    @property
    def dollars_preferred_at_top(self) -> bool:
        last = self.rows[-1]
        return last['dollar_utility'] >= last['token_utility']

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{key: row[key] for key in EXTENSION_COLUMNS} for row in self.rows],
            columns=EXTENSION_COLUMNS
        )

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'rows': self.rows,
            'token_optimum': self.token_optimum.to_dict(),
            'crossing_c': self.crossing_c,
            'note': self.note
        }
