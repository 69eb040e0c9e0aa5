"""
Módulo del modelo de traza de simulación
Guarda, por trayectoria y periodo, todo lo realizado en la subasta repetida
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

DOLLARS = 'dollars'
TOKENS = 'tokens'
EQUITY = 'equity'
REGIMES = (DOLLARS, TOKENS, EQUITY)

TRACE_COLUMNS = ['path_id', 't', 'B', 'p', 'S', 'M', 'A', 'revenue', 'bidder_payoff_mean']


@dataclass
class SimulationTrace:
    """
    Traza vectorizada de un régimen

    Los arreglos por periodo tienen forma (paths, T); los arreglos por postor
    tienen forma (paths, T, n). En los regímenes en dólares las columnas de
    tokens (precio, stock, demanda especulativa) quedan en NaN.
    """
    regime: str
    seed: int
    valuations: np.ndarray
    payments: np.ndarray
    winners: np.ndarray
    total_payment: np.ndarray
    revenue: np.ndarray
    bidder_payoffs: np.ndarray
    price: Optional[np.ndarray] = None
    speculative_demand: Optional[np.ndarray] = None
    tokens_paid: Optional[np.ndarray] = None
    stock: Optional[np.ndarray] = None
    auctioneer_tokens: Optional[np.ndarray] = None
    price_floor: Optional[np.ndarray] = None
    bidder_tokens: Optional[np.ndarray] = None

    @property
    def paths(self) -> int:
        return int(self.total_payment.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.total_payment.shape[1])

    def discount_factors(self, beta: float) -> np.ndarray:
        return beta ** np.arange(self.horizon)

    def pdv_revenue(self, beta: float) -> np.ndarray:
        """Valor presente descontado de los ingresos de cada trayectoria"""
        return self.revenue @ self.discount_factors(beta)

    def pdv_bidder_payoff(self, beta: float) -> np.ndarray:
        """Valor presente del pago de cada postor, forma (paths, n)"""
        return np.einsum('ptn,t->pn', self.bidder_payoffs, self.discount_factors(beta))

    def _column(self, values: Optional[np.ndarray]) -> np.ndarray:
        if values is None:
            return np.full(self.paths * self.horizon, np.nan)
        return values.reshape(-1)

    def to_frame(self) -> pd.DataFrame:
        """Una fila por (trayectoria, periodo) con el esquema del CSV de trazas"""
        path_id, period = np.meshgrid(np.arange(self.paths), np.arange(1, self.horizon + 1), indexing='ij')
        return pd.DataFrame({
            'path_id': path_id.reshape(-1),
            't': period.reshape(-1),
            'B': self.total_payment.reshape(-1),
            'p': self._column(self.price),
            'S': self._column(self.speculative_demand),
            'M': self._column(self.stock),
            'A': self._column(self.auctioneer_tokens),
            'revenue': self.revenue.reshape(-1),
            'bidder_payoff_mean': self.bidder_payoffs.mean(axis=-1).reshape(-1),
        }, columns=TRACE_COLUMNS)
