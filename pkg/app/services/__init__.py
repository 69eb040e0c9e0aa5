# Services package initialization
from app.services.valuation_service import ValuationService
from app.services.auction_service import AuctionService
from app.services.token_market_service import TokenMarketService
from app.services.equilibrium_service import EquilibriumService
from app.services.simulation_service import SimulationService
from app.services.accounting_service import AccountingService
from app.services.effort_service import EffortService

__all__ = [
    'ValuationService',
    'AuctionService',
    'TokenMarketService',
    'EquilibriumService',
    'SimulationService',
    'AccountingService',
    'EffortService',
]
