"""
Módulo del modelo de perfil de equilibrio
Capitalizaciones de mercado esperadas P_t = E[p_t·M_t] resueltas por inducción hacia atrás
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from app.models.token import MonetaryPolicy
from app.models.valuation import PaymentLaw, ValuationDistribution


@dataclass
class EquilibriumProfile:
    """Perfil de equilibrio con expectativas racionales para (F, n, T, beta, política)"""
    horizon: int
    market_caps: np.ndarray
    policy: MonetaryPolicy
    beta: float
    payment_law: PaymentLaw
    distribution: ValuationDistribution
    n: int
    method: str = 'quadrature'
    speculation_probability: Optional[np.ndarray] = None
    standard_errors: Optional[np.ndarray] = None

    def market_cap(self, t: int) -> float:
        """P_t para t en 1..T+1, con la convención P_{T+1} = 0"""
        if t == self.horizon + 1:
            return 0.0
        return float(self.market_caps[t - 1])

    def matches(self, distribution: ValuationDistribution, n: int, horizon: int) -> bool:
        """Verdadero si el perfil fue resuelto para la misma configuración"""
        return (self.distribution == distribution and self.n == n
                and self.horizon == horizon and self.policy.horizon == horizon)

    def to_frame(self) -> pd.DataFrame:
        """Tabla (t, P_t, speculation_prob) para el reporte de `solve`"""
        frame = pd.DataFrame({
            't': np.arange(1, self.horizon + 1),
            'P_t': self.market_caps,
            'speculation_prob': self.speculation_probability
            if self.speculation_probability is not None else np.nan,
        })
        if self.standard_errors is not None:
            frame['standard_error'] = self.standard_errors
        return frame

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'horizon': self.horizon,
            'market_caps': self.market_caps.tolist(),
            'policy': self.policy.to_dict(),
            'beta': self.beta,
            'method': self.method,
            'n': self.n,
            'distribution': self.distribution.to_dict(),
            'speculation_probability': None if self.speculation_probability is None
            else self.speculation_probability.tolist(),
            'standard_errors': None if self.standard_errors is None else self.standard_errors.tolist()
        }
