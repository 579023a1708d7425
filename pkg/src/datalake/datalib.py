"""Data-library federation: search external open-data sources, import tables.

Adapters are stateless between calls and registered once at startup; the
registry is the extension point for further sources. Every fetch result
carries a stable source URL so the ingestion provenance can point at it.

The World Bank adapter speaks the v2 indicators API with format=json and
filters indicator names client-side (the upstream keyword search is
unreliable); pagination is capped. The mock adapter serves bundled,
byte-deterministic fixtures and doubles as the fault-injection point for
upstream-failure tests, so everything here runs without network access.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Protocol

import requests

from .errors import FetchShapeError, RateLimited, UnknownSource, UpstreamUnavailable
from .ingest import RawTable

FETCH_TIMEOUT_SECONDS = 10.0
WORLDBANK_BASE = "https://api.worldbank.org"
WORLDBANK_PAGE_SIZE = 200
WORLDBANK_MAX_PAGES = 5


@dataclass(frozen=True)
class ExternalDatasetDescriptor:
    source: str
    dataset: str
    title: str
    description: str
    url: str

    def as_dict(self) -> dict:
        return {"source": self.source, "dataset": self.dataset, "title": self.title,
                "description": self.description, "url": self.url}


@dataclass
class FetchResult:
    table: RawTable
    url: str
    title: str
    description: str


class SourceAdapter(Protocol):
    id: str
    display_name: str

    def search(self, keywords: str) -> list[ExternalDatasetDescriptor]: ...

    def fetch(self, dataset: str) -> FetchResult: ...


class AdapterRegistry:
    """Id-keyed adapter map; registration order is the listing order."""

    def __init__(self):
        self._adapters: dict[str, SourceAdapter] = {}

    def register(self, adapter: SourceAdapter):
        self._adapters[adapter.id] = adapter

    def get(self, source: str) -> SourceAdapter:
        if source not in self._adapters:
            raise UnknownSource(f"no data-library source {source!r}")
        return self._adapters[source]

    def list_sources(self) -> list[dict]:
        return [{"id": a.id, "display_name": a.display_name} for a in self._adapters.values()]


class WorldBankAdapter:
    """Client for the World Bank v2 indicators API."""

    id = "worldbank"
    display_name = "World Bank Open Data"

    def __init__(self, base_url: str = WORLDBANK_BASE, session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()

    def _get(self, path: str, params: dict) -> list:
        url = f"{self.base_url}{path}"
        try:
            resp = self.session.get(url, params=params, timeout=FETCH_TIMEOUT_SECONDS)
        except requests.RequestException as e:
            raise UpstreamUnavailable(f"worldbank request failed: {e}") from None
        if resp.status_code == 429:
            raise RateLimited("worldbank rate limit hit")
        if resp.status_code >= 500:
            raise UpstreamUnavailable(f"worldbank returned {resp.status_code}")
        if resp.status_code != 200:
            raise FetchShapeError(f"worldbank returned {resp.status_code}")
        try:
            body = resp.json()
        except ValueError:
            raise FetchShapeError("worldbank response is not JSON") from None
        if not isinstance(body, list) or len(body) < 2 or not isinstance(body[1], list):
            raise FetchShapeError("worldbank response is not the [paging, rows] shape")
        return body

    def search(self, keywords: str) -> list[ExternalDatasetDescriptor]:
        terms = [t for t in keywords.casefold().split() if t]
        out: list[ExternalDatasetDescriptor] = []
        for page in range(1, WORLDBANK_MAX_PAGES + 1):
            body = self._get("/v2/indicator",
                             {"format": "json", "per_page": WORLDBANK_PAGE_SIZE, "page": page})
            paging, rows = body[0], body[1]
            for row in rows:
                name = str(row.get("name", ""))
                text = f"{name} {row.get('sourceNote', '')}".casefold()
                if all(t in text for t in terms):
                    out.append(ExternalDatasetDescriptor(
                        source=self.id, dataset=str(row.get("id", "")), title=name,
                        description=str(row.get("sourceNote", ""))[:500],
                        url=f"{self.base_url}/v2/indicator/{row.get('id', '')}",
                    ))
            if page >= int(paging.get("pages", 1) or 1):
                break
        return out

    def fetch(self, dataset: str) -> FetchResult:
        headers = ["Country", "Country Code", "Year", "Value"]
        rows: list[list[str]] = []
        title, description = dataset, ""
        page = 1
        while True:
            body = self._get(f"/v2/country/all/indicator/{dataset}",
                             {"format": "json", "per_page": 1000, "page": page})
            paging, data = body[0], body[1]
            for row in data:
                try:
                    country = row["country"]["value"]
                    code = row["countryiso3code"] or row["country"]["id"]
                    year = row["date"]
                    value = row["value"]
                    title = row["indicator"]["value"] or title
                except (KeyError, TypeError):
                    raise FetchShapeError("worldbank indicator row is not tabular") from None
                rows.append([str(country), str(code), str(year),
                             "" if value is None else str(value)])
            if page >= int(paging.get("pages", 1) or 1):
                break
            page += 1
        table = RawTable(headers=headers, rows=rows)
        return FetchResult(table=table, url=f"{self.base_url}/v2/country/all/indicator/{dataset}",
                           title=title, description=description)


# ----------------------------------------------------------------------
# mock source: bundled fixtures mirroring the family-planning walkthrough
# ----------------------------------------------------------------------

_MOCK_COUNTRIES = [
    ("India", "IND"), ("Brazil", "BRA"), ("Kenya", "KEN"), ("Indonesia", "IDN"),
    ("Mexico", "MEX"), ("Nigeria", "NGA"), ("Vietnam", "VNM"), ("Peru", "PER"),
]
_MOCK_YEARS = list(range(2008, 2015))


def _mock_rows(label_header: str, base: int, step: int) -> tuple[list[str], list[list[str]]]:
    # Values are a fixed arithmetic pattern: deterministic bytes, no RNG.
    headers = [label_header, "TIME PERIOD", "Value"]
    rows = []
    for ci, (name, _) in enumerate(_MOCK_COUNTRIES):
        for yi, year in enumerate(_MOCK_YEARS):
            value = base + ci * step + yi * 2
            rows.append([name, str(year), f"{value}.{(ci + yi) % 10}"])
    return headers, rows


_MOCK_DATASETS: dict[str, dict] = {
    "family-planning": {
        "title": "Contraceptive prevalence, modern methods (% of married women)",
        "description": "Share of married women using modern family planning methods, by country and year.",
        "build": lambda: _mock_rows("AREA LABEL", 30, 3),
    },
    "internet-access": {
        "title": "Households with internet access at home (%)",
        "description": "Percentage of households with internet access at home, by country and year.",
        "build": lambda: _mock_rows("Area", 20, 4),
    },
    "employment-women": {
        "title": "Share of women employed in the non-agriculture sector (%)",
        "description": "Women's employment in the non-agriculture sector as a share of total employment.",
        "build": lambda: _mock_rows("Region", 25, 2),
    },
}

MOCK_FAIL_DATASET = "fail-5xx"


class MockAdapter:
    """Deterministic in-process source; `fail-5xx` injects an upstream error."""

    id = "mock"
    display_name = "Mock Open Data (bundled fixtures)"
    base_url = "mock://opendata"

    def search(self, keywords: str) -> list[ExternalDatasetDescriptor]:
        terms = [t for t in keywords.casefold().split() if t]
        out = []
        for ds_id, meta in _MOCK_DATASETS.items():
            text = f"{ds_id} {meta['title']} {meta['description']}".casefold()
            if all(t in text for t in terms):
                out.append(ExternalDatasetDescriptor(
                    source=self.id, dataset=ds_id, title=meta["title"],
                    description=meta["description"], url=f"{self.base_url}/{ds_id}",
                ))
        return out

    def fetch(self, dataset: str) -> FetchResult:
        if dataset == MOCK_FAIL_DATASET:
            raise UpstreamUnavailable("mock upstream returned 500")
        if dataset not in _MOCK_DATASETS:
            raise FetchShapeError(f"mock source has no dataset {dataset!r}")
        meta = _MOCK_DATASETS[dataset]
        headers, rows = meta["build"]()
        return FetchResult(
            table=RawTable(headers=headers, rows=rows),
            url=f"{self.base_url}/{dataset}",
            title=meta["title"], description=meta["description"],
        )

    def fetch_csv_bytes(self, dataset: str) -> bytes:
        """Fixture payload as CSV bytes (useful for upload-path tests)."""
        res = self.fetch(dataset)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(res.table.headers)
        w.writerows(res.table.rows)
        return buf.getvalue().encode("utf-8")


def default_registry(worldbank_base: str = WORLDBANK_BASE) -> AdapterRegistry:
    reg = AdapterRegistry()
    reg.register(WorldBankAdapter(base_url=worldbank_base))
    reg.register(MockAdapter())
    return reg
