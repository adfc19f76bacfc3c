from .service import create_app
from .store import ContractStore, StoreEntry

__all__ = ["ContractStore", "StoreEntry", "create_app"]
