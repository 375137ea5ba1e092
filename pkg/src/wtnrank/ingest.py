"""Trade-record ingestion.

Reads delimited trade files (``year,exporter,importer,sitc,value_usd``),
resolves country codes, applies bloc aggregation (e.g. the 27 EU members
collapsed onto ``EUU``) and assembles the per-product money tensor.

Monetary values are carried as :class:`decimal.Decimal` end to end so that
aggregation and assembly are exact; the numerical modules convert to float64
once, via :meth:`MoneyMatrix.to_dense`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, localcontext
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import NoRecordsError, ParseError, UnknownCountryError

#: Number of one-digit SITC Rev. 1 sections; fixed by the classification.
N_PRODUCTS = 10

#: SITC Rev. 1 one-digit section labels, indexed by product 0-9.
PRODUCT_LABELS = (
    "Food and live animals",
    "Beverages and tobacco",
    "Crude materials, inedible, except fuels",
    "Mineral fuels, lubricants and related materials",
    "Animal and vegetable oils and fats",
    "Chemicals and related products",
    "Basic manufactures",
    "Machinery and transport equipment",
    "Miscellaneous manufactured articles",
    "Goods not classified elsewhere",
)

REQUIRED_COLUMNS = ("year", "exporter", "importer", "sitc", "value_usd")

#: Optional extra column: rows flagged as import-side mirror reports are
#: skipped to avoid double counting; export-side rows are ingested as-is.
FLOW_COLUMN = "flow"
_EXPORT_FLOWS = {"x", "export"}
_IMPORT_FLOWS = {"m", "import"}

# Decimal precision for money accumulation. Trade values carry ~15
# significant digits; 50 keeps every sum in this domain exact.
_MONEY_PRECISION = 50


def sitc_to_product(code: str) -> int:
    """Map an SITC code string to its one-digit product index (leading digit)."""
    if not code:
        raise ValueError("empty SITC code")
    lead = code[0]
    if lead not in "0123456789":
        raise ValueError(f"invalid SITC code {code!r}: leading character must be a digit")
    return int(lead)


@dataclass(frozen=True)
class TradeRecord:
    """One directed trade flow: ``value_usd`` of product ``sitc_digit`` from exporter to importer."""

    year: int
    exporter: str
    importer: str
    sitc_digit: int
    value_usd: Decimal

    def __post_init__(self):
        if not self.exporter or not self.importer:
            raise ValueError("country codes must be non-empty")
        if self.value_usd < 0:
            raise ValueError(f"negative trade value {self.value_usd}")
        if not 0 <= self.sitc_digit <= 9:
            raise ValueError(f"product index {self.sitc_digit} outside 0-9")


@dataclass(frozen=True)
class CountryRegistry:
    """Dense, alphabetically ordered index of canonical country codes.

    ``aggregation`` maps member codes onto their bloc code (e.g. DEU -> EUU);
    canonical codes are the post-aggregation ones and each gets a stable
    dense index in [0, n).
    """

    codes: tuple[str, ...]
    names: tuple[str, ...]
    aggregation: Mapping[str, str]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if list(self.codes) != sorted(self.codes):
            raise ValueError("registry codes must be sorted alphabetically")
        if len(set(self.codes)) != len(self.codes):
            raise ValueError("registry codes must be unique")
        if len(self.names) != len(self.codes):
            raise ValueError("one display name per code required")
        for member, bloc in self.aggregation.items():
            if bloc in self.aggregation:
                raise ValueError(f"aggregation chains not allowed: {member} -> {bloc} -> ...")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.codes)})

    @property
    def n(self) -> int:
        return len(self.codes)

    def canonical(self, code: str) -> str:
        """Resolve a raw code to its canonical (bloc-aggregated) form."""
        return self.aggregation.get(code, code)

    def index_of(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise UnknownCountryError(code) from None

    def __contains__(self, code: str) -> bool:
        return code in self._index

    @classmethod
    def build(
        cls,
        records: Iterable[TradeRecord],
        aggregation: Mapping[str, str] | None = None,
        names: Mapping[str, str] | None = None,
    ) -> "CountryRegistry":
        """Build a registry from the codes present in ``records``.

        Partner-only countries (appearing only as importer) are included.
        Display names default to the code itself.
        """
        aggregation = dict(aggregation or {})
        canonical = set()
        for rec in records:
            canonical.add(aggregation.get(rec.exporter, rec.exporter))
            canonical.add(aggregation.get(rec.importer, rec.importer))
        codes = tuple(sorted(canonical))
        names = names or {}
        return cls(
            codes=codes,
            names=tuple(names.get(c, c) for c in codes),
            aggregation=aggregation,
        )


def _as_text(source: IO | Iterable[str]) -> Iterable[str]:
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)):
        return io.TextIOWrapper(source, encoding="utf-8")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _parse_value(raw: str, line: int) -> Decimal:
    try:
        value = Decimal(raw.strip())
    except InvalidOperation:
        raise ParseError(line, f"non-numeric value {raw!r}") from None
    if not value.is_finite():
        raise ParseError(line, f"non-finite value {raw!r}")
    if value < 0:
        raise ParseError(line, f"negative value {raw!r}")
    return value


def parse_trade_records(source: IO | Iterable[str] | bytes | str, year: int) -> list[TradeRecord]:
    """Parse a header-bearing delimited trade file, keeping rows of ``year``.

    Raises ParseError (naming the line) for structural problems and
    NoRecordsError when the file holds no row for the requested year.
    """
    reader = csv.reader(_as_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "empty file, header expected") from None
    header = [h.strip().lower() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise ParseError(1, f"header misses column(s) {', '.join(missing)}")
    extras = [c for c in header if c not in REQUIRED_COLUMNS and c != FLOW_COLUMN]
    if extras:
        raise ParseError(1, f"unknown column(s) {', '.join(extras)}")
    pos = {name: header.index(name) for name in header}
    has_flow = FLOW_COLUMN in pos

    records = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(line, f"expected {len(header)} columns, found {len(row)}")
        try:
            row_year = int(row[pos["year"]].strip())
        except ValueError:
            raise ParseError(line, f"non-numeric year {row[pos['year']]!r}") from None
        if row_year != year:
            continue
        if has_flow:
            flow = row[pos[FLOW_COLUMN]].strip().lower()
            if flow in _IMPORT_FLOWS:
                continue  # mirror report of a flow already present export-side
            if flow not in _EXPORT_FLOWS:
                raise ParseError(line, f"unknown flow direction {row[pos[FLOW_COLUMN]]!r}")
        exporter = row[pos["exporter"]].strip()
        importer = row[pos["importer"]].strip()
        if not exporter or not importer:
            raise ParseError(line, "empty country code")
        try:
            product = sitc_to_product(row[pos["sitc"]].strip())
        except ValueError as exc:
            raise ParseError(line, str(exc)) from None
        value = _parse_value(row[pos["value_usd"]], line)
        records.append(TradeRecord(row_year, exporter, importer, product, value))
    if not records:
        raise NoRecordsError(year)
    return records


def apply_aggregation(records: Sequence[TradeRecord], registry: CountryRegistry) -> list[TradeRecord]:
    """Collapse member codes onto their bloc and merge the resulting flows.

    Flows whose exporter and importer collapse to the same country (bloc
    self-trade included) are dropped. Merged values are summed exactly in
    Decimal; the output is sorted by (year, product, importer, exporter),
    which makes the operation idempotent and order-independent.
    """
    merged: dict[tuple[int, int, str, str], Decimal] = {}
    with localcontext() as ctx:
        ctx.prec = _MONEY_PRECISION
        for rec in records:
            exporter = registry.canonical(rec.exporter)
            importer = registry.canonical(rec.importer)
            if exporter == importer:
                continue
            key = (rec.year, rec.sitc_digit, importer, exporter)
            merged[key] = merged.get(key, Decimal(0)) + rec.value_usd
    return [
        TradeRecord(year, exporter, importer, product, value)
        for (year, product, importer, exporter), value in sorted(merged.items())
    ]


@dataclass
class MoneyMatrix:
    """Money tensor: entry (p, c, c') = USD of product p exported from c' to c.

    Entries are exact Decimals keyed by (product, importer index, exporter
    index); the dense float64 view used by the numerical modules is built
    lazily and cached. The diagonal (c == c') is identically zero.
    """

    registry: CountryRegistry
    year: int
    entries: dict[tuple[int, int, int], Decimal]
    n_products: int = N_PRODUCTS
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for (p, imp_, exp_), value in self.entries.items():
            if not 0 <= p < self.n_products:
                raise ValueError(f"product index {p} outside 0-{self.n_products - 1}")
            if imp_ == exp_:
                raise ValueError(f"diagonal entry for country index {imp_} must be zero")
            if not 0 <= imp_ < self.registry.n or not 0 <= exp_ < self.registry.n:
                raise ValueError("country index outside registry range")
            if value < 0:
                raise ValueError("negative money entry")

    @property
    def n_countries(self) -> int:
        return self.registry.n

    def total_volume(self) -> Decimal:
        """Exact total traded volume V (sum of all entries)."""
        with localcontext() as ctx:
            ctx.prec = _MONEY_PRECISION
            return sum(self.entries.values(), Decimal(0))

    def to_dense(self) -> np.ndarray:
        """Float64 view of shape (n_products, n_countries, n_countries)."""
        if self._dense is None:
            dense = np.zeros((self.n_products, self.registry.n, self.registry.n))
            for (p, imp_, exp_), value in self.entries.items():
                dense[p, imp_, exp_] = float(value)
            self._dense = dense
        return self._dense

    def transposed(self) -> "MoneyMatrix":
        """Money matrix with every flow reversed (importer <-> exporter)."""
        swapped = {(p, exp_, imp_): v for (p, imp_, exp_), v in self.entries.items()}
        return MoneyMatrix(self.registry, self.year, swapped, self.n_products)

    @classmethod
    def from_dense(
        cls,
        dense: np.ndarray,
        registry: CountryRegistry,
        year: int,
    ) -> "MoneyMatrix":
        """Build from a float array; float -> Decimal conversion is exact."""
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 3 or dense.shape[1] != dense.shape[2]:
            raise ValueError(f"expected shape (n_products, n, n), got {dense.shape}")
        if dense.shape[1] != registry.n:
            raise ValueError("country dimension does not match registry")
        entries = {}
        for p, imp_, exp_ in zip(*np.nonzero(dense)):
            entries[(int(p), int(imp_), int(exp_))] = Decimal(float(dense[p, imp_, exp_]))
        return cls(registry, year, entries, n_products=dense.shape[0])


def assemble_money_matrix(
    records: Sequence[TradeRecord],
    registry: CountryRegistry,
    n_products: int = N_PRODUCTS,
) -> MoneyMatrix:
    """Accumulate aggregated records into a MoneyMatrix.

    Records must already be aggregated (no self flows, codes canonical).
    Accumulation runs in sorted record order with exact Decimal sums, so the
    result is independent of the input row order bit for bit.
    """
    if not records:
        raise ValueError("no records to assemble")
    years = {rec.year for rec in records}
    if len(years) > 1:
        raise ValueError(f"records span multiple years: {sorted(years)}")
    entries: dict[tuple[int, int, int], Decimal] = {}
    ordered = sorted(records, key=lambda r: (r.sitc_digit, r.importer, r.exporter))
    with localcontext() as ctx:
        ctx.prec = _MONEY_PRECISION
        for rec in ordered:
            if registry.canonical(rec.exporter) != rec.exporter or registry.canonical(rec.importer) != rec.importer:
                raise ValueError(f"record {rec.exporter}->{rec.importer} not aggregated")
            if rec.exporter == rec.importer:
                raise ValueError(f"self flow {rec.exporter}->{rec.importer} must be removed by aggregation")
            key = (rec.sitc_digit, registry.index_of(rec.importer), registry.index_of(rec.exporter))
            if rec.value_usd == 0:
                continue
            entries[key] = entries.get(key, Decimal(0)) + rec.value_usd
    return MoneyMatrix(registry, years.pop(), entries, n_products=n_products)


def read_aggregation_file(source: IO | Iterable[str] | bytes | str) -> dict[str, str]:
    """Read a ``member_code,bloc_code`` file (header line required)."""
    reader = csv.reader(_as_text(source))
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise ParseError(1, "empty aggregation file") from None
    if header != ["member_code", "bloc_code"]:
        raise ParseError(1, "aggregation header must be 'member_code,bloc_code'")
    mapping: dict[str, str] = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(line, f"expected 2 columns, found {len(row)}")
        member, bloc = row[0].strip(), row[1].strip()
        if not member or not bloc:
            raise ParseError(line, "empty code in aggregation pair")
        if member in mapping and mapping[member] != bloc:
            raise ParseError(line, f"member {member} mapped to two blocs")
        mapping[member] = bloc
    return mapping


def load_money_matrix(
    path,
    year: int,
    aggregation: Mapping[str, str] | None = None,
) -> MoneyMatrix:
    """Parse ``path``, build the registry, aggregate and assemble in one go."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        records = parse_trade_records(fh, year)
    registry = CountryRegistry.build(records, aggregation)
    aggregated = apply_aggregation(records, registry)
    if not aggregated:
        raise NoRecordsError(year)
    return assemble_money_matrix(aggregated, registry)
