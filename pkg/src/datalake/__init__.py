"""Self-hostable datalake for tabular research data.

Provenance-tracked ingestion, transformation, versioning, search,
federation, and server-side chart computation behind one HTTP API.
"""

__version__ = "0.1.0"

from .service import Datalake

__all__ = ["Datalake", "__version__"]
