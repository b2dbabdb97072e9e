import csv
import dataclasses
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence, Union

from stopping.consts import OutputFormat
from stopping.domain import (
    AmbiguitySpec,
    DiscreteDistribution,
    FigureData,
    FigureFiveRow,
    FigureOneRow,
    MomentBoundCertificate,
    SimulationReport,
    ThresholdResult,
    VerificationReport,
)
from stopping.errors import (
    InvalidDistribution,
    InvalidParameter,
    OutputFormatError,
    StoppingError,
    VerificationFailed,
)
from stopping.serializers.output import Output
from stopping.utils import fmt_float

Result = Union[
    ThresholdResult,
    MomentBoundCertificate,
    SimulationReport,
    VerificationReport,
    FigureData,
    StoppingError,
]


def _num(value: float) -> Union[float, str]:
    """A float rounded to the output precision; non-finite values become strings."""
    if not math.isfinite(value):
        return fmt_float(value)
    return float(fmt_float(value))


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return _flag(value)
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def spec_to_json(spec: AmbiguitySpec) -> str:
    return json.dumps(spec.as_dict(), indent=2) + "\n"


def spec_from_json(text: str) -> AmbiguitySpec:
    """Read a spec document (not validated).

    Raises
    ------
    InvalidParameter
        If the text is not a JSON object with the spec fields.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as ex:
        raise InvalidParameter(f"Spec document is not valid JSON: {ex}.") from ex
    if not isinstance(data, dict):
        raise InvalidParameter("Spec document must be a JSON object.")
    return AmbiguitySpec.from_dict(data)


def distribution_to_json(dist: DiscreteDistribution) -> str:
    return json.dumps(dist.as_dict(), indent=2) + "\n"


def distribution_from_json(text: str) -> DiscreteDistribution:
    """Read a distribution document ``{"atoms": [[point, prob], ...]}``.

    Raises
    ------
    InvalidDistribution
        If the text is not valid JSON or the atoms are not a distribution.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as ex:
        raise InvalidDistribution(f"Distribution document is not valid JSON: {ex}.") from ex
    if not isinstance(data, dict):
        raise InvalidDistribution("Distribution document must be a JSON object.")
    return DiscreteDistribution.from_dict(data)


class Serializer:
    """CSV and JSON serializer."""

    def __init__(self, fmt: Union[str, OutputFormat]):
        """Initialize serializer.

        Raises
        ------
        OutputFormatError
            If the format is not supported.
        """
        self.fmt = OutputFormat.get(fmt)

    def _csv(self, header: Sequence[str], rows: Sequence[Sequence[Any]], status_code: int = 0) -> Output:
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter=",", lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return Output(buffer.getvalue().encode("utf-8"), fmt=self.fmt, status_code=status_code)

    def _json(self, document: Dict[str, Any], status_code: int = 0) -> Output:
        text = json.dumps(document, indent=2, allow_nan=False) + "\n"
        return Output(text.encode("utf-8"), fmt=self.fmt, status_code=status_code)

    def serialize_thresholds(self, result: ThresholdResult) -> Output:
        """One row per ``i``; two-point results with a turning point add both recursions."""
        schedule = result.schedule
        report = result.turning_points
        if self.fmt is OutputFormat.CSV:
            header = ["i", "T_i"]
            if report is not None:
                header += ["f_star_value", "g_star_value", "is_switch"]
            rows: List[List[Any]] = []
            for i, value in enumerate(schedule.values):
                row: List[Any] = [i, fmt_float(value)]
                if report is not None:
                    row += [
                        fmt_float(report.left_values[i]),
                        fmt_float(report.right_values[i]),
                        _flag(report.is_switch(i)),
                    ]
                rows.append(row)
            return self._csv(header, rows)

        document: Dict[str, Any] = {
            "spec": result.spec.as_dict(),
            "method": result.method.value,
            "n": schedule.n,
            "values": [_num(v) for v in schedule.values],
        }
        if report is not None:
            document["switch_index"] = report.switch_index
            document["n0"] = report.n0
        if result.generic is not None:
            document["generic_values"] = [_num(v) for v in result.generic.values]
        if result.max_difference is not None:
            document["max_difference"] = _num(result.max_difference)
        return self._json(document)

    def serialize_certificate(self, cert: MomentBoundCertificate) -> Output:
        if self.fmt is OutputFormat.CSV:
            rows = [[fmt_float(pt), fmt_float(prob)] for pt, prob in cert.primal.atoms]
            return self._csv(["point", "probability"], rows)
        document: Dict[str, Any] = {
            "value": _num(cert.value),
            "regime": cert.regime_name,
            "regime_index": cert.regime,
            "xi": _num(cert.xi),
            "atoms": [[_num(pt), _num(prob)] for pt, prob in cert.primal.atoms],
            "dual": {
                "basis": cert.dual.basis.value,
                "lambdas": [_num(lam) for lam in cert.dual.lambdas],
                "center": _num(cert.dual.center),
            },
        }
        if cert.breakpoint_source is not None:
            document["breakpoint_source"] = cert.breakpoint_source
        return self._json(document)

    def serialize_simulation(self, report: SimulationReport) -> Output:
        fields: Dict[str, Any] = {
            "episodes": report.episodes,
            "mean_payoff": report.mean_payoff,
            "std_error": report.std_error,
            "seed": report.seed,
            "no_acceptance": report.no_acceptance,
            "mean_offline_max": report.mean_offline_max,
        }
        if self.fmt is OutputFormat.CSV:
            header = list(fields) + ["selection_histogram"]
            row = [_cell(v) for v in fields.values()]
            row.append(";".join(str(c) for c in report.selection_histogram))
            return self._csv(header, [row])
        document = {k: _num(v) if isinstance(v, float) else v for k, v in fields.items()}
        document["selection_histogram"] = list(report.selection_histogram)
        return self._json(document)

    def serialize_verification(self, report: VerificationReport) -> Output:
        """Table of checks; a failed report carries status code 2."""
        status = 0 if report.passed else 2
        names = sorted(report.checks)
        if self.fmt is OutputFormat.CSV:
            rows = [
                [name, fmt_float(report.checks[name]), _flag(report.checks[name] <= report.tolerance)]
                for name in names
            ]
            return self._csv(["check", "discrepancy", "passed"], rows, status_code=status)
        document = {
            "tolerance": _num(report.tolerance),
            "passed": report.passed,
            "checks": {name: _num(report.checks[name]) for name in names},
        }
        return self._json(document, status_code=status)

    def serialize_figure(self, data: FigureData) -> Output:
        row_type = FigureOneRow if data.number == 1 else FigureFiveRow
        header = [f.name for f in dataclasses.fields(row_type)]
        records = [dataclasses.asdict(row) for row in data.rows]
        if self.fmt is OutputFormat.CSV:
            rows = [[_cell(record[key]) for key in header] for record in records]
            return self._csv(header, rows)
        for record in records:
            for key, value in record.items():
                if isinstance(value, float):
                    record[key] = _num(value)
        return self._json({"figure": data.number, "rows": records})

    def serialize_error(self, error: StoppingError, status_code: Optional[int] = None) -> Output:
        """Error document; verification failures get status code 2, all others 1."""
        if status_code is None:
            status_code = 2 if isinstance(error, VerificationFailed) else 1
        name = error.__class__.__name__
        if self.fmt is OutputFormat.CSV:
            return self._csv(["error", "message"], [[name, error.error]], status_code=status_code)
        return self._json({"error": name, "message": error.error}, status_code=status_code)


def serialize(result_or_error: Result, fmt: Union[str, OutputFormat] = OutputFormat.JSON) -> Output:
    """Serialize a result or an error.

    Parameters
    ----------
    result_or_error : Result
        A computed result or the error raised while computing it.
    fmt : OutputFormat
        Serialization format.

    Returns
    -------
    Output
        Populated output object.
    """
    try:
        serializer = Serializer(fmt=fmt)
        if isinstance(result_or_error, StoppingError):
            return serializer.serialize_error(result_or_error)
        if isinstance(result_or_error, ThresholdResult):
            return serializer.serialize_thresholds(result_or_error)
        if isinstance(result_or_error, MomentBoundCertificate):
            return serializer.serialize_certificate(result_or_error)
        if isinstance(result_or_error, SimulationReport):
            return serializer.serialize_simulation(result_or_error)
        if isinstance(result_or_error, VerificationReport):
            return serializer.serialize_verification(result_or_error)
        if isinstance(result_or_error, FigureData):
            return serializer.serialize_figure(result_or_error)
        return serializer.serialize_error(
            StoppingError(f"Cannot serialize {type(result_or_error).__name__}.")
        )
    except OutputFormatError as ex:
        serializer = Serializer(fmt=OutputFormat.JSON)
        return serializer.serialize_error(ex)
