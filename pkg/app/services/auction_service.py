"""
Módulo de servicio de subastas
Subasta sellada de un periodo (segundo precio y primer precio) con precio de reserva
"""
import logging
from typing import Iterable, Optional

import numpy as np
from scipy import integrate

from app.exceptions import DomainError, UnsupportedFormatError
from app.models.auction import FIRST_PRICE, SECOND_PRICE, AuctionBatch, AuctionFormat, AuctionOutcome
from app.models.valuation import MonteCarloEstimate, ValuationDistribution
from app.services.valuation_service import ValuationService

logger = logging.getLogger(__name__)

MIN_REVENUE_PATHS = 10_000
REVENUE_BATCH = 250_000


class AuctionService:
    """Servicio que resuelve subastas selladas y sus estadísticos de ingreso"""

    def __init__(self, valuation_service: Optional[ValuationService] = None):
        """
        Inicializar AuctionService

        Args:
            valuation_service (ValuationService): Servicio para simular valoraciones
        """
        self.valuation_service = valuation_service or ValuationService()

    def run_auction(self, auction_format: AuctionFormat, valuations,
                    dist: Optional[ValuationDistribution] = None) -> AuctionOutcome:
        """
        Ejecutar una subasta de un periodo

        Args:
            auction_format (AuctionFormat): Formato y precio de reserva
            valuations: Vector con las valoraciones de los postores
            dist (ValuationDistribution): Requerida en primer precio para calcular las pujas

        Returns:
            AuctionOutcome: Ganador, mensajes, pagos y pago total

        Raises:
            DomainError: Si el vector de valoraciones está vacío o es inválido
        """
        values = np.asarray(valuations, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError('Se requiere un vector no vacío de valoraciones')
        if values.size < 2:
            raise DomainError('La subasta requiere al menos 2 postores')
        batch = self.run_auction_batch(auction_format, values[None, :], dist)
        return batch.outcome(0)

    def run_auction_batch(self, auction_format: AuctionFormat, valuations,
                          dist: Optional[ValuationDistribution] = None) -> AuctionBatch:
        """Versión vectorizada de run_auction; el último eje indexa a los postores"""
        values = np.asarray(valuations, dtype=float)
        if values.shape[-1] < 2:
            raise DomainError('La subasta requiere al menos 2 postores')
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError('Las valoraciones deben ser finitas y no negativas')

        if auction_format.kind == SECOND_PRICE:
            messages = values
        else:
            if dist is None:
                raise DomainError('La subasta de primer precio necesita la distribución de valoraciones')
            messages = np.where(
                values >= auction_format.reserve,
                self.fpa_equilibrium_bid(dist, values.shape[-1], values, reserve=auction_format.reserve),
                0.0
            )
        return self._settle(auction_format, messages)

    def _settle(self, auction_format: AuctionFormat, messages: np.ndarray) -> AuctionBatch:
        reserve = auction_format.reserve
        eligible = messages >= reserve
        masked = np.where(eligible, messages, -np.inf)
        # argmax devuelve el primer máximo: desempate por el menor índice
        winner = np.argmax(masked, axis=-1)
        has_winner = eligible.any(axis=-1)

        if auction_format.kind == SECOND_PRICE:
            second = np.sort(messages, axis=-1)[..., -2]
            price = np.maximum(second, reserve)
        else:
            price = np.take_along_axis(messages, winner[..., None], axis=-1)[..., 0]

        payments = np.zeros_like(messages)
        np.put_along_axis(payments, winner[..., None], np.where(has_winner, price, 0.0)[..., None], axis=-1)
        return AuctionBatch(
            winners=np.where(has_winner, winner, -1),
            messages=messages,
            payments=payments
        )

    def fpa_equilibrium_bid(self, dist: ValuationDistribution, n: int, v,
                            reserve: Optional[float] = None):
        """
        Puja de equilibrio simétrico en primer precio

        b(v) = v - integral_r^v F(x)^(n-1) dx / F(v)^(n-1), con r la reserva
        (por defecto v_low). Para la uniforme la integral es cerrada.

        Raises:
            UnsupportedFormatError: Si la distribución es una rejilla discreta con más de un átomo
        """
        if n < 2:
            raise DomainError('El modelo requiere n >= 2 postores')
        if not dist.is_continuous:
            if dist.is_degenerate:
                atom = np.full_like(np.asarray(v, dtype=float), float(dist.values[0]))
                return float(atom) if atom.ndim == 0 else atom
            raise UnsupportedFormatError('El equilibrio de primer precio con átomos está fuera de alcance')

        low = dist.support_low
        reserve = low if reserve is None else max(float(reserve), low)
        v = np.asarray(v, dtype=float)
        if np.any(v < low - 1e-12) or np.any(v > dist.support_high + 1e-12):
            raise DomainError('La valoración debe estar en el soporte de la distribución')

        shifted = np.maximum(v - low, 0.0)
        reserve_shift = reserve - low
        with np.errstate(divide='ignore', invalid='ignore'):
            shading = (shifted ** n - reserve_shift ** n) / (n * shifted ** (n - 1))
        bids = np.maximum(np.where(shifted > 0, v - shading, reserve), reserve)
        return float(bids) if bids.ndim == 0 else bids

    def fpa_bid_by_quadrature(self, dist: ValuationDistribution, n: int, v: float) -> float:
        """Puja de primer precio integrando F^(n-1) numéricamente (oráculo escalar)"""
        if not dist.is_continuous:
            raise UnsupportedFormatError('El equilibrio de primer precio con átomos está fuera de alcance')
        top = float(dist.cdf(v)) ** (n - 1)
        if top == 0.0:
            return float(dist.support_low)
        area, _ = integrate.quad(lambda x: float(dist.cdf(x)) ** (n - 1), dist.support_low, v,
                                 epsabs=1e-13, epsrel=1e-12)
        return float(v - area / top)

    def expected_revenue(self, auction_format: AuctionFormat, dist: ValuationDistribution,
                         n: int, paths: int, rng: np.random.Generator) -> MonteCarloEstimate:
        """
        Estimar E[B] por Monte Carlo

        Args:
            auction_format (AuctionFormat): Formato de la subasta
            dist (ValuationDistribution): Ley de valoraciones
            n (int): Número de postores
            paths (int): Número de subastas simuladas (>= 10^4)
            rng (np.random.Generator): Flujo aleatorio con semilla explícita

        Returns:
            MonteCarloEstimate: Media y error estándar del pago total
        """
        if paths < MIN_REVENUE_PATHS:
            raise DomainError(f'expected_revenue requiere al menos {MIN_REVENUE_PATHS} trayectorias')
        totals = []
        remaining = paths
        while remaining > 0:
            size = min(REVENUE_BATCH, remaining)
            values = self.valuation_service.sample_valuations(dist, n, rng, size=size)
            totals.append(self.run_auction_batch(auction_format, values, dist).total_payment)
            remaining -= size
        estimate = MonteCarloEstimate.from_samples(np.concatenate(totals))
        logger.info(
            f"Ingreso esperado {auction_format.kind} (n={n}, {paths} trayectorias): "
            f"{estimate.mean:.6f} ± {estimate.standard_error:.2e}"
        )
        return estimate

    def best_deviation_gain(self, auction_format: AuctionFormat, valuations, bidder: int,
                            grid: Iterable[float],
                            dist: Optional[ValuationDistribution] = None) -> float:
        """
        Mayor ganancia de un postor al desviarse a cualquier mensaje de la rejilla

        Los demás postores mantienen su estrategia de equilibrio. En segundo
        precio el resultado es <= 0 para cualquier perfil (veracidad).
        """
        values = np.asarray(valuations, dtype=float)
        if not 0 <= bidder < values.size:
            raise DomainError(f'Índice de postor fuera de rango: {bidder}')
        baseline = self.run_auction_batch(auction_format, values[None, :], dist)
        truthful = self._bidder_payoff(baseline, values[bidder], bidder)[0]

        candidates = np.asarray(list(grid), dtype=float)
        messages = np.repeat(baseline.messages, candidates.size, axis=0)
        messages[:, bidder] = candidates
        deviations = self._settle(auction_format, messages)
        gains = self._bidder_payoff(deviations, values[bidder], bidder) - truthful
        return float(gains.max())

    @staticmethod
    def _bidder_payoff(batch: AuctionBatch, value: float, bidder: int) -> np.ndarray:
        wins = batch.winners == bidder
        return np.where(wins, value, 0.0) - batch.payments[:, bidder]
