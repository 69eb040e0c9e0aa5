"""
Módulo de servicio de equilibrio
Inducción hacia atrás sobre las capitalizaciones de mercado esperadas P_t = E[p_t·M_t]
"""
import itertools
import logging
from typing import Optional

import numpy as np

from app.exceptions import DomainError
from app.models.equilibrium import EquilibriumProfile
from app.models.token import MonetaryPolicy
from app.models.valuation import DISCRETE, MonteCarloEstimate, PaymentLaw, ValuationDistribution
from app.services.valuation_service import ValuationService

logger = logging.getLogger(__name__)

QUADRATURE = 'quadrature'
MONTE_CARLO = 'monte-carlo'
ENUMERATION = 'enumeration'

ORACLE_MAX_ATOMS = 8
ORACLE_MAX_BIDDERS = 4
ORACLE_MAX_HORIZON = 4


class EquilibriumService:
    """Servicio que resuelve el perfil de precios con expectativas racionales"""

    def __init__(self, valuation_service: Optional[ValuationService] = None):
        """
        Inicializar EquilibriumService

        Args:
            valuation_service (ValuationService): Fuente de la ley del pago total
        """
        self.valuation_service = valuation_service or ValuationService()

    def solve_backward(self, dist: ValuationDistribution, n: int, horizon: int, beta: float,
                       policy: MonetaryPolicy, method: str = QUADRATURE,
                       paths: Optional[int] = None, seed: Optional[int] = None) -> EquilibriumProfile:
        """
        Resolver P_1..P_T hacia atrás

        P_T = E[B] y, para t < T, P_t = E[max(B, beta·P_(t+1) - sigma_t·B)].
        El estado es la capitalización X_t = p_t·M_t, por lo que no hace falta
        seguir el stock aleatorio de tokens.

        Args:
            dist (ValuationDistribution): Ley de valoraciones
            n (int): Número de postores
            horizon (int): Horizonte T >= 1
            beta (float): Factor de descuento en (0, 1)
            policy (MonetaryPolicy): Política con longitud T
            method (str): 'quadrature' o 'monte-carlo'
            paths (int): Trayectorias por periodo (solo monte-carlo)
            seed (int): Semilla (solo monte-carlo)

        Returns:
            EquilibriumProfile: Perfil con probabilidad de especulación por periodo

        Raises:
            DomainError: Si el horizonte no coincide con la política o el método no existe
        """
        self._check_inputs(horizon, beta, policy)
        law = self.valuation_service.total_payment_distribution(dist, n)

        if method == QUADRATURE:
            caps, speculation = self._solve_quadrature(law, horizon, beta, policy)
            errors = None
        elif method == MONTE_CARLO:
            if not paths or paths < 1 or seed is None:
                raise DomainError('El método monte-carlo requiere paths >= 1 y una semilla')
            caps, speculation, errors = self._solve_monte_carlo(law, horizon, beta, policy, paths, seed)
        else:
            raise DomainError(f'Método de solución no soportado: {method}')

        profile = EquilibriumProfile(
            horizon=horizon,
            market_caps=caps,
            policy=policy,
            beta=beta,
            payment_law=law,
            distribution=dist,
            n=n,
            method=method,
            speculation_probability=speculation,
            standard_errors=errors
        )
        logger.info(f"Perfil de equilibrio resuelto ({method}, T={horizon}): P_1={caps[0]:.10f}")
        return profile

    def _solve_quadrature(self, law: PaymentLaw, horizon: int, beta: float, policy: MonetaryPolicy):
        caps = np.zeros(horizon)
        speculation = np.zeros(horizon)
        caps[-1] = law.mean
        for t in range(horizon - 2, -1, -1):
            continuation = beta * caps[t + 1]
            sigma = policy.sigma[t]
            kink = [continuation / (1.0 + sigma)] if sigma > -1 else []
            caps[t] = law.expect(lambda b: np.maximum(b, continuation - sigma * b), breakpoints=kink)
            speculation[t] = self._speculation_probability(law, sigma, continuation)
        return caps, speculation

    def _solve_monte_carlo(self, law: PaymentLaw, horizon: int, beta: float,
                           policy: MonetaryPolicy, paths: int, seed: int):
        streams = np.random.SeedSequence(seed).spawn(horizon)
        caps = np.zeros(horizon)
        errors = np.zeros(horizon)
        speculation = np.zeros(horizon)

        terminal = MonteCarloEstimate.from_samples(law.sample(np.random.default_rng(streams[-1]), paths))
        caps[-1], errors[-1] = terminal.mean, terminal.standard_error
        for t in range(horizon - 2, -1, -1):
            payments = law.sample(np.random.default_rng(streams[t]), paths)
            continuation = beta * caps[t + 1]
            sigma = policy.sigma[t]
            estimate = MonteCarloEstimate.from_samples(np.maximum(payments, continuation - sigma * payments))
            caps[t], errors[t] = estimate.mean, estimate.standard_error
            speculation[t] = float(np.mean((1.0 + sigma) * payments < continuation))
        return caps, speculation, errors

    @staticmethod
    def _speculation_probability(law: PaymentLaw, sigma: float, continuation: float) -> float:
        """P((1 + sigma)·B < beta·P_(t+1))"""
        if sigma == -1:
            return 1.0 if continuation > 0 else 0.0
        return float(law.cdf(continuation / (1.0 + sigma), strict=True))

    def expected_price(self, profile: EquilibriumProfile, t: int, M_t):
        """
        Precio esperado p_e_t = P_t / M_t

        Raises:
            DomainError: Si M_t <= 0 o t está fuera de 1..T+1
        """
        if not 1 <= t <= profile.horizon + 1:
            raise DomainError(f'El periodo {t} está fuera de 1..{profile.horizon + 1}')
        stock = np.asarray(M_t, dtype=float)
        if np.any(stock <= 0):
            raise DomainError('El stock de tokens M_t debe ser positivo')
        price = profile.market_cap(t) / stock
        return price.item() if price.ndim == 0 else price

    def solve_discrete_oracle(self, dist: ValuationDistribution, n: int, horizon: int, beta: float,
                              policy: MonetaryPolicy) -> EquilibriumProfile:
        """
        Oráculo exacto por enumeración de todos los perfiles de valoraciones

        Limitado a rejillas de hasta 8 átomos, n <= 4 y T <= 4.
        """
        if dist.kind != DISCRETE:
            raise DomainError('El oráculo de enumeración requiere una rejilla discreta')
        if len(dist.atoms) > ORACLE_MAX_ATOMS or n > ORACLE_MAX_BIDDERS or horizon > ORACLE_MAX_HORIZON:
            raise DomainError(
                f'El oráculo admite hasta {ORACLE_MAX_ATOMS} átomos, n <= {ORACLE_MAX_BIDDERS} '
                f'y T <= {ORACLE_MAX_HORIZON}'
            )
        if n < 2:
            raise DomainError('El modelo requiere n >= 2 postores')
        self._check_inputs(horizon, beta, policy)

        pmf = {}
        for profile in itertools.product(zip(dist.values, dist.probabilities), repeat=n):
            values = sorted(value for value, _ in profile)
            weight = float(np.prod([prob for _, prob in profile]))
            pmf[values[-2]] = pmf.get(values[-2], 0.0) + weight
        support = np.array(sorted(pmf))
        weights = np.array([pmf[value] for value in support])

        caps = np.zeros(horizon)
        speculation = np.zeros(horizon)
        caps[-1] = float(weights @ support)
        for t in range(horizon - 2, -1, -1):
            continuation = beta * caps[t + 1]
            sigma = policy.sigma[t]
            caps[t] = float(weights @ np.maximum(support, continuation - sigma * support))
            speculation[t] = float(weights @ ((1.0 + sigma) * support < continuation))

        law = PaymentLaw(n=n, low=dist.support_low, high=dist.support_high,
                         values=support, probabilities=weights)
        return EquilibriumProfile(
            horizon=horizon,
            market_caps=caps,
            policy=policy,
            beta=beta,
            payment_law=law,
            distribution=dist,
            n=n,
            method=ENUMERATION,
            speculation_probability=speculation
        )

    @staticmethod
    def _check_inputs(horizon: int, beta: float, policy: MonetaryPolicy) -> None:
        if horizon < 1:
            raise DomainError('El horizonte T debe ser >= 1')
        if policy.horizon != horizon:
            raise DomainError(f'La política tiene longitud {policy.horizon} pero T={horizon}')
        if not 0 < beta < 1:
            raise DomainError('beta debe estar en (0, 1)')
