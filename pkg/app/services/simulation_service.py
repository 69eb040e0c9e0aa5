"""
Módulo de servicio de simulación
Trayectorias completas de la subasta repetida en dólares, en tokens y con equity
"""
import logging
from typing import Optional, Tuple

import numpy as np

from app.exceptions import DomainError, LedgerError, NumericalError
from app.models.auction import SECOND_PRICE, AuctionBatch, AuctionFormat
from app.models.equilibrium import EquilibriumProfile
from app.models.token import LedgerState
from app.models.trace import DOLLARS, EQUITY, TOKENS, SimulationTrace
from app.models.valuation import ValuationDistribution
from app.services.auction_service import AuctionService
from app.services.token_market_service import TokenMarketService
from app.services.valuation_service import ValuationService

logger = logging.getLogger(__name__)

CONSISTENCY_TOLERANCE = 1e-9


class SimulationService:
    """
    Servicio de simulación vectorizada por trayectorias

    Todas las corridas con la misma semilla usan el mismo panel de
    valoraciones (números aleatorios comunes entre regímenes).
    """

    def __init__(self,
                 valuation_service: Optional[ValuationService] = None,
                 auction_service: Optional[AuctionService] = None,
                 market_service: Optional[TokenMarketService] = None):
        self.valuation_service = valuation_service or ValuationService()
        self.auction_service = auction_service or AuctionService(self.valuation_service)
        self.market_service = market_service or TokenMarketService()

    def _run_panel(self, dist: ValuationDistribution, n: int, horizon: int,
                   paths: int, seed: int) -> Tuple[np.ndarray, AuctionBatch]:
        values = self.valuation_service.draw_valuation_panel(dist, n, horizon, paths, seed)
        auction_format = AuctionFormat(SECOND_PRICE, reserve=dist.support_low)
        return values, self.auction_service.run_auction_batch(auction_format, values)

    @staticmethod
    def _auction_payoffs(values: np.ndarray, batch: AuctionBatch) -> np.ndarray:
        n = values.shape[-1]
        wins = batch.winners[..., None] == np.arange(n)
        return np.where(wins, values, 0.0) - batch.payments

    def simulate_token_auction(self, profile: EquilibriumProfile, dist: ValuationDistribution,
                               n: int, horizon: int, M1: float, paths: int, seed: int) -> SimulationTrace:
        """
        Simular la subasta liquidada en tokens

        En cada periodo: subasta de segundo precio, capitalización X_t por punto
        fijo, vaciado del mercado con p_e_(t+1) = P_(t+1)/M_(t+1), venta de todo
        el stock del subastador (r_t = p_t·A_t) y política monetaria.

        Raises:
            DomainError: Si el perfil no corresponde a (F, n, T)
            NumericalError: Si el stock se agota antes del horizonte o el vaciado
                no reproduce la capitalización del punto fijo
        """
        if not profile.matches(dist, n, horizon):
            raise DomainError('El perfil de equilibrio no corresponde a la configuración simulada')
        if M1 <= 0:
            raise DomainError('El stock inicial M1 debe ser positivo')

        policy, beta = profile.policy, profile.beta
        values, batch = self._run_panel(dist, n, horizon, paths, seed)
        payments = batch.total_payment

        shape = (paths, horizon)
        price, speculative, paid = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        stock, auctioneer, floor = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        bidder_tokens = np.zeros(shape + (n,))
        speculation_cost = np.zeros(shape + (n,))
        revenue = np.zeros(shape)

        ledger = LedgerState.initial(M1, n, paths)
        for t in range(1, horizon + 1):
            i = t - 1
            B = payments[:, i]
            tau, sigma = policy.tau[i], policy.sigma[i]
            P_next = profile.market_cap(t + 1)

            cap = self.market_service.market_cap_fixed_point(B, sigma, beta, P_next)
            target_price = cap / ledger.M
            tokens_paid = np.divide(B, target_price, out=np.zeros_like(B), where=target_price > 0)
            next_stock = (1.0 + tau) * (ledger.M + sigma * tokens_paid)

            if t < horizon:
                if np.any(next_stock <= 0):
                    raise NumericalError(f'El stock de tokens se agota al cierre del periodo {t}')
                p_next = P_next / next_stock
            else:
                p_next = np.zeros(paths)

            clearing = self.market_service.clear_market(B, ledger.M, beta, tau, p_next)
            gap = np.abs(clearing.price - target_price)
            if np.any(gap > CONSISTENCY_TOLERANCE * np.maximum(1.0, target_price)):
                raise NumericalError(
                    f'El vaciado del periodo {t} no reproduce el punto fijo (desvío {float(gap.max()):.3e})'
                )

            stock[:, i], auctioneer[:, i] = ledger.M, ledger.A
            bidder_tokens[:, i] = ledger.holdings
            price[:, i] = clearing.price
            speculative[:, i] = clearing.speculative_demand
            paid[:, i] = clearing.tokens_paid
            floor[:, i] = beta * (1.0 + tau) * p_next
            revenue[:, i] = clearing.price * ledger.A

            holdings = self.market_service.split_speculation(clearing.speculative_demand, n)
            speculation_cost[:, i] = clearing.price[:, None] * (holdings - ledger.holdings)
            ledger = self.market_service.apply_policy(ledger, clearing.tokens_paid, holdings, tau, sigma)
            if np.any(ledger.feasibility_gap() > CONSISTENCY_TOLERANCE * np.maximum(1.0, ledger.M)):
                raise LedgerError(f'El libro de tokens no es factible al cierre del periodo {t}')

        trace = SimulationTrace(
            regime=TOKENS,
            seed=seed,
            valuations=values,
            payments=batch.payments,
            winners=batch.winners,
            total_payment=payments,
            revenue=revenue,
            bidder_payoffs=self._auction_payoffs(values, batch) - speculation_cost,
            price=price,
            speculative_demand=speculative,
            tokens_paid=paid,
            stock=stock,
            auctioneer_tokens=auctioneer,
            price_floor=floor,
            bidder_tokens=bidder_tokens
        )
        logger.info(
            f"Simulación en tokens: {paths} trayectorias, T={horizon}, "
            f"VPD medio de ingresos {float(trace.pdv_revenue(beta).mean()):.6f}"
        )
        return trace

    def simulate_dollar_auction(self, dist: ValuationDistribution, n: int, horizon: int,
                                paths: int, seed: int) -> SimulationTrace:
        """Subasta repetida en dólares: r_t = B_t"""
        values, batch = self._run_panel(dist, n, horizon, paths, seed)
        payments = batch.total_payment
        logger.info(f"Simulación en dólares: {paths} trayectorias, T={horizon}")
        return SimulationTrace(
            regime=DOLLARS,
            seed=seed,
            valuations=values,
            payments=batch.payments,
            winners=batch.winners,
            total_payment=payments,
            revenue=payments.copy(),
            bidder_payoffs=self._auction_payoffs(values, batch)
        )

    def simulate_equity_benchmark(self, dist: ValuationDistribution, n: int, horizon: int,
                                  beta: float, paths: int, seed: int) -> SimulationTrace:
        """
        Subasta en dólares con venta de todos los flujos futuros a precio justo

        r_1 = B_1 + beta·(1 - beta^(T-1))/(1 - beta)·k y r_t = 0 para t >= 2.
        """
        if not 0 < beta < 1:
            raise DomainError('beta debe estar en (0, 1)')
        k = self.valuation_service.total_payment_distribution(dist, n).mean
        values, batch = self._run_panel(dist, n, horizon, paths, seed)
        payments = batch.total_payment

        revenue = np.zeros_like(payments)
        pledged = beta * (1.0 - beta ** (horizon - 1)) / (1.0 - beta) * k
        revenue[:, 0] = payments[:, 0] + pledged
        logger.info(f"Benchmark de equity: valor vendido a inversionistas {pledged:.6f}")
        return SimulationTrace(
            regime=EQUITY,
            seed=seed,
            valuations=values,
            payments=batch.payments,
            winners=batch.winners,
            total_payment=payments,
            revenue=revenue,
            bidder_payoffs=self._auction_payoffs(values, batch)
        )
