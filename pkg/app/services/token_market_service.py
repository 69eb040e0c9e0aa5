"""
Módulo de servicio del mercado de tokens
Vaciado del mercado por periodo, demanda especulativa y transición del libro de tokens
"""
import logging

import numpy as np

from app.exceptions import DomainError, LedgerError
from app.models.token import LedgerState, MarketClearingResult

logger = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-9


class TokenMarketService:
    """
    Servicio del mercado de tokens

    Todas las operaciones aceptan escalares o arreglos (una entrada por
    trayectoria) y devuelven la misma forma.
    """

    def clear_market(self, B, M, beta: float, tau, p_next_expected) -> MarketClearingResult:
        """
        Precio de equilibrio del periodo y demanda especulativa

        p = max(B/M, beta·(1+tau)·p_e), S = max(M - B/(beta·(1+tau)·p_e), 0).

        Args:
            B: Pago total en dólares del periodo
            M: Stock total de tokens (> 0)
            beta (float): Factor de descuento
            tau: Crecimiento uniforme de los tokens entre periodos
            p_next_expected: Precio esperado del siguiente periodo

        Returns:
            MarketClearingResult: Precio, demanda especulativa y tokens usados para pagar.
            Con B = 0 y piso nulo el precio no está definido: se devuelve precio 0,
            S = M y la marca `degenerate`.
        """
        B = np.asarray(B, dtype=float)
        M = np.asarray(M, dtype=float)
        tau = np.asarray(tau, dtype=float)
        p_next = np.asarray(p_next_expected, dtype=float)

        if np.any(M <= 0):
            raise DomainError('El stock de tokens M debe ser positivo para vaciar el mercado')
        if np.any(B < 0) or np.any(p_next < 0):
            raise DomainError('B y el precio esperado deben ser no negativos')
        if not 0 < beta <= 1:
            raise DomainError('beta debe estar en (0, 1]')
        if np.any(tau < -1):
            raise DomainError('tau debe ser >= -1')

        floor = beta * (1.0 + tau) * p_next
        degenerate = (B == 0) & (floor == 0)
        price = np.maximum(B / M, floor)
        safe_floor = np.where(floor > 0, floor, 1.0)
        speculative = np.where(floor > 0, np.maximum(M - B / safe_floor, 0.0), 0.0)
        speculative = np.where(degenerate, M, speculative)
        safe_price = np.where(price > 0, price, 1.0)
        tokens_paid = np.where(price > 0, B / safe_price, 0.0)

        if np.any(degenerate):
            logger.warning(f"⚠️ Estado degenerado de precio cero en {int(np.sum(degenerate))} casos")

        return MarketClearingResult(
            price=self._unwrap(price),
            speculative_demand=self._unwrap(speculative),
            tokens_paid=self._unwrap(tokens_paid),
            degenerate=self._unwrap(degenerate)
        )

    def market_cap_fixed_point(self, B, sigma, beta: float, P_next):
        """
        Capitalización de mercado consistente con expectativas racionales

        X = max(B, beta·P_next - sigma·B); tau no interviene.
        """
        B = np.asarray(B, dtype=float)
        P_next = np.asarray(P_next, dtype=float)
        if np.any(B < 0) or np.any(P_next < 0):
            raise DomainError('B y P_next deben ser no negativos')
        return self._unwrap(np.maximum(B, beta * P_next - np.asarray(sigma, dtype=float) * B))

    def speculation_active(self, B, sigma, beta: float, P_next):
        """Verdadero donde (1 + sigma)·B < beta·P_next"""
        active = (1.0 + np.asarray(sigma, dtype=float)) * np.asarray(B, dtype=float) < beta * np.asarray(P_next)
        return self._unwrap(active)

    def split_speculation(self, speculative_demand, n: int) -> np.ndarray:
        """Reparto igualitario de la demanda especulativa entre los n postores"""
        share = np.asarray(speculative_demand, dtype=float)[..., None] / n
        return np.repeat(share, n, axis=-1)

    def apply_policy(self, ledger: LedgerState, tokens_paid, speculator_holdings,
                     tau, sigma) -> LedgerState:
        """
        Aplicar la política monetaria al cierre del periodo

        El subastador vende todo su stock previo, de modo que sus tenencias del
        siguiente periodo son solo los tokens cobrados: A' = (1+tau)(1+sigma)·pagados,
        a_i' = (1+tau)·s_i y M' = A' + suma_i a_i'.

        Raises:
            LedgerError: Si los tokens pagados y especulados superan el stock
        """
        tau = np.asarray(tau, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if np.any(tau < -1) or np.any(sigma < -1):
            raise DomainError('tau y sigma deben ser >= -1')

        paid = np.asarray(tokens_paid, dtype=float)
        holdings = np.asarray(speculator_holdings, dtype=float)
        used = paid + holdings.sum(axis=-1)
        if np.any(used > np.asarray(ledger.M) + FEASIBILITY_TOLERANCE):
            raise LedgerError(
                f'Los tokens pagados y especulados ({float(np.max(used)):.6g}) superan el stock M'
            )

        next_holdings = (1.0 + tau)[..., None] * holdings if tau.ndim else (1.0 + tau) * holdings
        next_auctioneer = (1.0 + tau) * (1.0 + sigma) * paid
        # A' sigue la forma por trayectoria del libro aunque lo pagado sea escalar
        shape = np.broadcast_shapes(next_auctioneer.shape, np.shape(ledger.M), next_holdings.shape[:-1])
        next_auctioneer = np.broadcast_to(next_auctioneer, shape).astype(float)
        next_stock = next_auctioneer + next_holdings.sum(axis=-1)
        return LedgerState(t=ledger.t + 1, M=next_stock, A=next_auctioneer, holdings=next_holdings)

    @staticmethod
    def _unwrap(values: np.ndarray):
        return values.item() if values.ndim == 0 else values
