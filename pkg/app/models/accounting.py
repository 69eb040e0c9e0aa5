"""
Módulo de modelos de contabilidad de ingresos
Preferencias del subastador, planes de ahorro y el reporte de comparación de regímenes
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from app.exceptions import DomainError
from app.models.valuation import MonteCarloEstimate

RISK_NEUTRAL = 'risk-neutral'
LOG = 'log'
CRRA = 'crra'


@dataclass(frozen=True)
class UtilityModel:
    """
    Utilidad por periodo del subastador

    Se mantiene el supuesto beta·R = 1: el activo libre de riesgo rinde 1/beta.
    """
    kind: str = RISK_NEUTRAL
    w1: float = 0.0
    beta: float = 0.9
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (RISK_NEUTRAL, LOG, CRRA):
            raise DomainError(f'Tipo de utilidad no soportado: {self.kind}')
        if not 0 < self.beta < 1:
            raise DomainError('beta debe estar en (0, 1)')
        if self.w1 < 0:
            raise DomainError('Los activos iniciales w1 deben ser no negativos')
        if self.kind == CRRA and (self.gamma is None or self.gamma <= 0 or self.gamma == 1):
            raise DomainError('CRRA requiere gamma > 0 y gamma != 1')

    @property
    def gross_return(self) -> float:
        return 1.0 / self.beta

    @property
    def requires_positive_consumption(self) -> bool:
        return self.kind != RISK_NEUTRAL

    def utility(self, consumption):
        c = np.asarray(consumption, dtype=float)
        if self.kind == RISK_NEUTRAL:
            return c
        if np.any(c <= 0):
            raise DomainError('El consumo debe ser positivo con utilidad log/CRRA')
        if self.kind == LOG:
            return np.log(c)
        return c ** (1.0 - self.gamma) / (1.0 - self.gamma)

    def marginal_utility(self, consumption):
        c = np.asarray(consumption, dtype=float)
        if self.kind == RISK_NEUTRAL:
            return np.ones_like(c)
        if self.kind == LOG:
            return 1.0 / c
        return c ** (-self.gamma)

    def to_dict(self):
        """Convertir a diccionario"""
        return {'kind': self.kind, 'w1': self.w1, 'beta': self.beta, 'gamma': self.gamma}


@dataclass
class SavingsPlan:
    """Plan de activos y consumo del problema determinista de suavizamiento"""
    assets: List[float]
    consumption: List[float]
    utility: float
    euler_residuals: List[float] = field(default_factory=list)

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'assets': self.assets,
            'consumption': self.consumption,
            'utility': self.utility,
            'euler_residuals': self.euler_residuals
        }


@dataclass
class RegimeUtility:
    """Utilidad esperada de un régimen (o regla de ahorro) con su error estándar"""
    regime: str
    estimate: MonteCarloEstimate
    gap_to_token: Optional[MonteCarloEstimate] = None

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'regime': self.regime,
            'utility': self.estimate.mean,
            'se': self.estimate.standard_error,
            'gap_to_token': None if self.gap_to_token is None else self.gap_to_token.mean,
            'gap_se': None if self.gap_to_token is None else self.gap_to_token.standard_error,
        }


@dataclass
class CorollaryReport:
    """Comparación entre la subasta con quema de tokens y la subasta en dólares"""
    token_burn: RegimeUtility
    upper_bound: RegimeUtility
    dollar_rules: List[RegimeUtility]
    tolerance_sigmas: float = 3.0

    @property
    def bound_attained(self) -> bool:
        gap = self.token_burn.estimate.mean - self.upper_bound.estimate.mean
        se = math.hypot(self.token_burn.estimate.standard_error, self.upper_bound.estimate.standard_error)
        return abs(gap) <= self.tolerance_sigmas * se + 1e-9

    @property
    def token_preferred(self) -> bool:
        """(a) >= (b) para cada regla de ahorro factible"""
        return all(rule.gap_to_token.mean >= -self.tolerance_sigmas * rule.gap_to_token.standard_error - 1e-9
                   for rule in self.dollar_rules)

    @property
    def strictly_preferred(self) -> bool:
        return all(rule.gap_to_token.mean > self.tolerance_sigmas * rule.gap_to_token.standard_error
                   for rule in self.dollar_rules)

    def to_frame(self) -> pd.DataFrame:
        rows = [self.token_burn.to_dict(), self.upper_bound.to_dict()]
        rows.extend(rule.to_dict() for rule in self.dollar_rules)
        return pd.DataFrame(rows, columns=['regime', 'utility', 'se', 'gap_to_token', 'gap_se'])

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'rows': self.to_frame().to_dict('records'),
            'bound_attained': self.bound_attained,
            'token_preferred': self.token_preferred,
            'strictly_preferred': self.strictly_preferred
        }
