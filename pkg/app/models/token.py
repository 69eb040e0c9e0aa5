"""
Módulo de modelos del mercado de tokens
Política monetaria, estado del libro de tokens y resultado del vaciado de mercado
"""
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from app.exceptions import DomainError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class MonetaryPolicy:
    """
    Política monetaria comprometida (tau_t, sigma_t) para t = 1..T

    tau_t multiplica todos los tokens entre periodos; sigma_t solo los tokens
    usados para pagar al subastador. sigma_t = -1 quema todo lo cobrado.
    """
    tau: Tuple[float, ...]
    sigma: Tuple[float, ...]

    def __post_init__(self):
        if len(self.tau) != len(self.sigma):
            raise DomainError(
                f'tau y sigma deben tener la misma longitud ({len(self.tau)} != {len(self.sigma)})'
            )
        if len(self.tau) == 0:
            raise DomainError('La política necesita al menos un periodo')
        for t, (tau, sigma) in enumerate(zip(self.tau, self.sigma)):
            if tau < -1:
                raise DomainError(f'tau[{t}]={tau} está por debajo de -1')
            if sigma < -1:
                raise DomainError(f'sigma[{t}]={sigma} está por debajo de -1')

    @classmethod
    def from_vectors(cls, tau: Sequence[float], sigma: Sequence[float]) -> 'MonetaryPolicy':
        return cls(tuple(float(x) for x in tau), tuple(float(x) for x in sigma))

    @classmethod
    def constant(cls, horizon: int, sigma: float = 0.0, tau: float = 0.0) -> 'MonetaryPolicy':
        """Política con los mismos (tau, sigma) en todos los periodos"""
        return cls(tuple([float(tau)] * horizon), tuple([float(sigma)] * horizon))

    @property
    def horizon(self) -> int:
        return len(self.tau)

    def to_dict(self):
        """Convertir a diccionario"""
        return {'tau': list(self.tau), 'sigma': list(self.sigma)}


@dataclass
class LedgerState:
    """
    Estado del libro de tokens al inicio del periodo t

    Los campos pueden ser escalares o arreglos (una entrada por trayectoria);
    `holdings` tiene como último eje a los postores.
    """
    t: int
    M: ArrayLike
    A: ArrayLike
    holdings: np.ndarray

    @classmethod
    def initial(cls, M1: float, n: int, paths: int = 1) -> 'LedgerState':
        """Estado en t=1: el subastador posee todo el stock"""
        if M1 <= 0:
            raise DomainError('El stock inicial M1 debe ser positivo')
        stock = np.full(paths, float(M1))
        return cls(t=1, M=stock, A=stock.copy(), holdings=np.zeros((paths, n)))

    def feasibility_gap(self) -> np.ndarray:
        """|A + suma_i a_i - M|, debe ser ~0"""
        return np.abs(np.asarray(self.A) + np.asarray(self.holdings).sum(axis=-1) - np.asarray(self.M))

    def to_dict(self) -> Dict:
        """Convertir a diccionario"""
        return {
            't': self.t,
            'M': np.asarray(self.M).tolist(),
            'A': np.asarray(self.A).tolist(),
            'holdings': np.asarray(self.holdings).tolist()
        }


@dataclass
class MarketClearingResult:
    """Precio de equilibrio, demanda especulativa y tokens usados para pagar"""
    price: ArrayLike
    speculative_demand: ArrayLike
    tokens_paid: ArrayLike
    degenerate: ArrayLike = False

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'price': np.asarray(self.price).tolist(),
            'speculative_demand': np.asarray(self.speculative_demand).tolist(),
            'tokens_paid': np.asarray(self.tokens_paid).tolist(),
            'degenerate': np.asarray(self.degenerate).tolist()
        }
