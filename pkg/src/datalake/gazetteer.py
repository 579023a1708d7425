"""Bundled gazetteer: country names/aliases -> ISO-3166 alpha-3, US states -> FIPS.

Static data only; no network geocoding. Lookup is case-insensitive on a
whitespace-normalized key. Cells that already look like an ISO alpha-3 code
or a 2/5-digit FIPS code pass through unchanged, so state- and county-keyed
tables work without bundling the full county name list.
"""

from __future__ import annotations

import re

COUNTRIES: dict[str, str] = {
    "Afghanistan": "AFG", "Albania": "ALB", "Algeria": "DZA", "Andorra": "AND",
    "Angola": "AGO", "Antigua and Barbuda": "ATG", "Argentina": "ARG",
    "Armenia": "ARM", "Australia": "AUS", "Austria": "AUT", "Azerbaijan": "AZE",
    "Bahamas": "BHS", "Bahrain": "BHR", "Bangladesh": "BGD", "Barbados": "BRB",
    "Belarus": "BLR", "Belgium": "BEL", "Belize": "BLZ", "Benin": "BEN",
    "Bhutan": "BTN", "Bolivia": "BOL", "Bosnia and Herzegovina": "BIH",
    "Botswana": "BWA", "Brazil": "BRA", "Brunei": "BRN", "Bulgaria": "BGR",
    "Burkina Faso": "BFA", "Burundi": "BDI", "Cabo Verde": "CPV",
    "Cambodia": "KHM", "Cameroon": "CMR", "Canada": "CAN",
    "Central African Republic": "CAF", "Chad": "TCD", "Chile": "CHL",
    "China": "CHN", "Colombia": "COL", "Comoros": "COM", "Congo": "COG",
    "Costa Rica": "CRI", "Croatia": "HRV", "Cuba": "CUB", "Cyprus": "CYP",
    "Czechia": "CZE", "Denmark": "DNK", "Djibouti": "DJI", "Dominica": "DMA",
    "Dominican Republic": "DOM", "Ecuador": "ECU", "Egypt": "EGY",
    "El Salvador": "SLV", "Equatorial Guinea": "GNQ", "Eritrea": "ERI",
    "Estonia": "EST", "Eswatini": "SWZ", "Ethiopia": "ETH", "Fiji": "FJI",
    "Finland": "FIN", "France": "FRA", "Gabon": "GAB", "Gambia": "GMB",
    "Georgia": "GEO", "Germany": "DEU", "Ghana": "GHA", "Greece": "GRC",
    "Grenada": "GRD", "Guatemala": "GTM", "Guinea": "GIN",
    "Guinea-Bissau": "GNB", "Guyana": "GUY", "Haiti": "HTI", "Honduras": "HND",
    "Hungary": "HUN", "Iceland": "ISL", "India": "IND", "Indonesia": "IDN",
    "Iran": "IRN", "Iraq": "IRQ", "Ireland": "IRL", "Israel": "ISR",
    "Italy": "ITA", "Jamaica": "JAM", "Japan": "JPN", "Jordan": "JOR",
    "Kazakhstan": "KAZ", "Kenya": "KEN", "Kiribati": "KIR", "Kuwait": "KWT",
    "Kyrgyzstan": "KGZ", "Laos": "LAO", "Latvia": "LVA", "Lebanon": "LBN",
    "Lesotho": "LSO", "Liberia": "LBR", "Libya": "LBY", "Liechtenstein": "LIE",
    "Lithuania": "LTU", "Luxembourg": "LUX", "Madagascar": "MDG",
    "Malawi": "MWI", "Malaysia": "MYS", "Maldives": "MDV", "Mali": "MLI",
    "Malta": "MLT", "Marshall Islands": "MHL", "Mauritania": "MRT",
    "Mauritius": "MUS", "Mexico": "MEX", "Micronesia": "FSM", "Moldova": "MDA",
    "Monaco": "MCO", "Mongolia": "MNG", "Montenegro": "MNE", "Morocco": "MAR",
    "Mozambique": "MOZ", "Myanmar": "MMR", "Namibia": "NAM", "Nauru": "NRU",
    "Nepal": "NPL", "Netherlands": "NLD", "New Zealand": "NZL",
    "Nicaragua": "NIC", "Niger": "NER", "Nigeria": "NGA",
    "North Korea": "PRK", "North Macedonia": "MKD", "Norway": "NOR",
    "Oman": "OMN", "Pakistan": "PAK", "Palau": "PLW", "Panama": "PAN",
    "Papua New Guinea": "PNG", "Paraguay": "PRY", "Peru": "PER",
    "Philippines": "PHL", "Poland": "POL", "Portugal": "PRT", "Qatar": "QAT",
    "Romania": "ROU", "Russia": "RUS", "Rwanda": "RWA",
    "Saint Kitts and Nevis": "KNA", "Saint Lucia": "LCA",
    "Saint Vincent and the Grenadines": "VCT", "Samoa": "WSM",
    "San Marino": "SMR", "Sao Tome and Principe": "STP",
    "Saudi Arabia": "SAU", "Senegal": "SEN", "Serbia": "SRB",
    "Seychelles": "SYC", "Sierra Leone": "SLE", "Singapore": "SGP",
    "Slovakia": "SVK", "Slovenia": "SVN", "Solomon Islands": "SLB",
    "Somalia": "SOM", "South Africa": "ZAF", "South Korea": "KOR",
    "South Sudan": "SSD", "Spain": "ESP", "Sri Lanka": "LKA", "Sudan": "SDN",
    "Suriname": "SUR", "Sweden": "SWE", "Switzerland": "CHE", "Syria": "SYR",
    "Taiwan": "TWN", "Tajikistan": "TJK", "Tanzania": "TZA", "Thailand": "THA",
    "Timor-Leste": "TLS", "Togo": "TGO", "Tonga": "TON",
    "Trinidad and Tobago": "TTO", "Tunisia": "TUN", "Turkey": "TUR",
    "Turkmenistan": "TKM", "Tuvalu": "TUV", "Uganda": "UGA", "Ukraine": "UKR",
    "United Arab Emirates": "ARE", "United Kingdom": "GBR",
    "United States": "USA", "Uruguay": "URY", "Uzbekistan": "UZB",
    "Vanuatu": "VUT", "Venezuela": "VEN", "Vietnam": "VNM", "Yemen": "YEM",
    "Zambia": "ZMB", "Zimbabwe": "ZWE",
}

COUNTRY_ALIASES: dict[str, str] = {
    "USA": "USA", "US": "USA", "United States of America": "USA",
    "UK": "GBR", "Great Britain": "GBR", "Britain": "GBR",
    "Republic of Korea": "KOR", "Korea, Rep.": "KOR",
    "Democratic People's Republic of Korea": "PRK", "Korea, Dem. People's Rep.": "PRK",
    "Russian Federation": "RUS", "Viet Nam": "VNM", "Czech Republic": "CZE",
    "Cape Verde": "CPV", "Ivory Coast": "CIV", "Cote d'Ivoire": "CIV",
    "Swaziland": "SWZ", "Burma": "MMR", "Macedonia": "MKD",
    "Democratic Republic of the Congo": "COD", "DR Congo": "COD",
    "Congo, Dem. Rep.": "COD", "Congo, Rep.": "COG",
    "Republic of the Congo": "COG", "East Timor": "TLS",
    "Iran, Islamic Rep.": "IRN", "Syrian Arab Republic": "SYR",
    "Lao PDR": "LAO", "Kyrgyz Republic": "KGZ", "Slovak Republic": "SVK",
    "Egypt, Arab Rep.": "EGY", "Venezuela, RB": "VEN", "Yemen, Rep.": "YEM",
    "Gambia, The": "GMB", "Bahamas, The": "BHS", "Turkiye": "TUR",
    "Bolivia (Plurinational State of)": "BOL", "Holland": "NLD",
    "United Republic of Tanzania": "TZA", "Republic of Moldova": "MDA",
    "Brunei Darussalam": "BRN", "Micronesia, Fed. Sts.": "FSM",
    "St. Kitts and Nevis": "KNA", "St. Lucia": "LCA",
    "St. Vincent and the Grenadines": "VCT",
}

US_STATES: dict[str, str] = {
    "Alabama": "01", "Alaska": "02", "Arizona": "04", "Arkansas": "05",
    "California": "06", "Colorado": "08", "Connecticut": "09",
    "Delaware": "10", "District of Columbia": "11", "Florida": "12",
    "Georgia": "13", "Hawaii": "15", "Idaho": "16", "Illinois": "17",
    "Indiana": "18", "Iowa": "19", "Kansas": "20", "Kentucky": "21",
    "Louisiana": "22", "Maine": "23", "Maryland": "24", "Massachusetts": "25",
    "Michigan": "26", "Minnesota": "27", "Mississippi": "28", "Missouri": "29",
    "Montana": "30", "Nebraska": "31", "Nevada": "32", "New Hampshire": "33",
    "New Jersey": "34", "New Mexico": "35", "New York": "36",
    "North Carolina": "37", "North Dakota": "38", "Ohio": "39",
    "Oklahoma": "40", "Oregon": "41", "Pennsylvania": "42",
    "Rhode Island": "44", "South Carolina": "45", "South Dakota": "46",
    "Tennessee": "47", "Texas": "48", "Utah": "49", "Vermont": "50",
    "Virginia": "51", "Washington": "53", "West Virginia": "54",
    "Wisconsin": "55", "Wyoming": "56",
}

_LATLONG_RE = re.compile(r"^\s*([+-]?\d+(?:\.\d+)?)\s*,\s*([+-]?\d+(?:\.\d+)?)\s*$")
_ALPHA3_RE = re.compile(r"^[A-Za-z]{3}$")
_FIPS_RE = re.compile(r"^\d{2}(\d{3})?$")


def _norm(name: str) -> str:
    return " ".join(name.split()).casefold()


_NAME_TO_CODE: dict[str, str] = {}
for _n, _c in COUNTRIES.items():
    _NAME_TO_CODE[_norm(_n)] = _c
for _n, _c in COUNTRY_ALIASES.items():
    _NAME_TO_CODE.setdefault(_norm(_n), _c)
_STATE_TO_FIPS = {_norm(n): f for n, f in US_STATES.items()}
_ALPHA3_CODES = frozenset(COUNTRIES.values()) | frozenset(COUNTRY_ALIASES.values())


def is_latlong_pair(cell: str) -> bool:
    m = _LATLONG_RE.match(cell)
    if not m:
        return False
    lat, lon = float(m.group(1)), float(m.group(2))
    return abs(lat) <= 90.0 and abs(lon) <= 180.0


def is_place_name(cell: str) -> bool:
    key = _norm(cell)
    return key in _NAME_TO_CODE or key in _STATE_TO_FIPS


def looks_location(cell: str) -> bool:
    """Inference predicate: gazetteer name or a lat/long pair in one cell."""
    return is_place_name(cell) or is_latlong_pair(cell)


def region_code(cell: str) -> str | None:
    """Normalize a region cell to its map key (alpha-3 or FIPS), else None."""
    s = cell.strip()
    if not s:
        return None
    key = _norm(s)
    if key in _NAME_TO_CODE:
        return _NAME_TO_CODE[key]
    if key in _STATE_TO_FIPS:
        return _STATE_TO_FIPS[key]
    if _ALPHA3_RE.match(s) and s.upper() in _ALPHA3_CODES:
        return s.upper()
    if _FIPS_RE.match(s):
        return s
    return None
