"""
Módulo de modelos de subasta
Modelos de datos para el formato de subasta y sus resultados
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.exceptions import DomainError

SECOND_PRICE = 'second-price'
FIRST_PRICE = 'first-price'


@dataclass(frozen=True)
class AuctionFormat:
    """Formato de subasta sellada con precio de reserva"""
    kind: str = SECOND_PRICE
    reserve: float = 0.0

    def __post_init__(self):
        if self.kind not in (SECOND_PRICE, FIRST_PRICE):
            raise DomainError(f'Formato de subasta no soportado: {self.kind}')
        if self.reserve < 0:
            raise DomainError('El precio de reserva debe ser no negativo')

    def to_dict(self):
        """Convertir a diccionario"""
        return {'kind': self.kind, 'reserve': self.reserve}


@dataclass
class AuctionOutcome:
    """Resultado de una subasta de un periodo"""
    winner: Optional[int]
    messages: List[float]
    payments: List[float]
    total_payment: float

    def to_dict(self):
        """Convertir a diccionario"""
        return {
            'winner': self.winner,
            'messages': self.messages,
            'payments': self.payments,
            'total_payment': self.total_payment
        }


@dataclass
class AuctionBatch:
    """Resultados vectorizados de muchas subastas (una fila por trayectoria)"""
    winners: np.ndarray
    messages: np.ndarray
    payments: np.ndarray

    @property
    def total_payment(self) -> np.ndarray:
        return self.payments.sum(axis=-1)

    def outcome(self, row: int) -> AuctionOutcome:
        """Extraer el resultado escalar de una fila"""
        winner = int(self.winners[row])
        return AuctionOutcome(
            winner=None if winner < 0 else winner,
            messages=self.messages[row].tolist(),
            payments=self.payments[row].tolist(),
            total_payment=float(self.payments[row].sum())
        )
