"""OTLP/HTTP exporters that post the JSON encoding of tuning spans and metrics."""

import json
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple
from urllib.parse import urljoin

import httpx
from opentelemetry.sdk.metrics import (
    Counter,
    Histogram,
    ObservableCounter,
    ObservableGauge,
    ObservableUpDownCounter,
    UpDownCounter,
)
from opentelemetry.sdk.metrics.export import (
    AggregationTemporality,
    Metric,
    MetricExporter,
    MetricExportResult,
    MetricsData,
)
from opentelemetry.sdk.trace import ReadableSpan
from opentelemetry.sdk.trace.export import SpanExporter, SpanExportResult

logger = logging.getLogger(__name__)

# OTLP enum value for delta temporality.
DELTA_TEMPORALITY = 1

# Counters report per-interval increments; up-down counters and gauges report levels.
METRIC_TEMPORALITY = {
    Counter: AggregationTemporality.DELTA,
    Histogram: AggregationTemporality.DELTA,
    ObservableCounter: AggregationTemporality.DELTA,
    UpDownCounter: AggregationTemporality.CUMULATIVE,
    ObservableUpDownCounter: AggregationTemporality.CUMULATIVE,
    ObservableGauge: AggregationTemporality.CUMULATIVE,
}


def attr_value_to_json(value: Any) -> Dict[str, Any]:
    """Encode an attribute value as an OTLP ``AnyValue``; sequences become arrays."""
    if isinstance(value, bool):
        return {"boolValue": value}
    if isinstance(value, int):
        return {"intValue": str(value)}
    if isinstance(value, float):
        return {"doubleValue": value}
    if isinstance(value, (list, tuple)):
        return {"arrayValue": {"values": [attr_value_to_json(v) for v in value]}}
    return {"stringValue": value if isinstance(value, str) else str(value)}


def attributes_to_json(attributes: Any) -> List[Dict[str, Any]]:
    return [{"key": k, "value": attr_value_to_json(v)} for k, v in (attributes or {}).items()]


def _scope_json(scope: Any) -> Dict[str, str]:
    return {"name": scope.name if scope else "", "version": (scope.version if scope else "") or ""}


class _JsonPoster:
    """One OTLP signal endpoint: ``<base>/<signal>`` with JSON headers."""

    def __init__(
        self,
        base: str,
        signal: str,
        headers: Optional[Dict[str, str]],
        timeout: float,
        client: Optional[httpx.Client],
    ):
        self.url = urljoin(base + "/", signal)
        self.signal = signal
        self.headers = {**(headers or {}), "Content-Type": "application/json"}
        self.client = client or httpx.Client(timeout=timeout)

    def post(self, body: Dict[str, Any]) -> bool:
        try:
            self.client.post(self.url, json=body, headers=self.headers).raise_for_status()
        except httpx.HTTPError as e:
            logger.warning("OTLP %s export to %s failed: %s", self.signal, self.url, e)
            return False
        return True

    def close(self) -> None:
        self.client.close()


class OTLPJsonSpanExporter(SpanExporter):
    """
    Posts finished tuning spans to ``<endpoint>/traces``.

    Args:
        endpoint: Base OTLP/HTTP URL of the collector
        headers: Extra request headers, typically from :func:`gridtune.telemetry.otlp_headers`
        timeout: Request timeout in seconds
        client: HTTP client to use instead of a new one
    """

    def __init__(
        self,
        endpoint: str,
        headers: Optional[Dict[str, str]] = None,
        timeout: float = 10,
        client: Optional[httpx.Client] = None,
    ):
        self._poster = _JsonPoster(endpoint, "traces", headers, timeout, client)

    @property
    def endpoint(self) -> str:
        return self._poster.url

    def export(self, spans: Sequence[ReadableSpan]) -> SpanExportResult:
        if not spans:
            return SpanExportResult.SUCCESS
        if self._poster.post(spans_to_otlp_json(spans)):
            return SpanExportResult.SUCCESS
        return SpanExportResult.FAILURE

    def shutdown(self) -> None:
        self._poster.close()

    def force_flush(self, timeout_millis: int = 30000) -> bool:
        return True


def _span_json(span: ReadableSpan) -> Dict[str, Any]:
    assert span.context is not None
    body: Dict[str, Any] = {
        "traceId": format(span.context.trace_id, "032x"),
        "spanId": format(span.context.span_id, "016x"),
        "name": span.name,
        "kind": span.kind.value + 1,
        "startTimeUnixNano": str(span.start_time),
        "endTimeUnixNano": str(span.end_time or span.start_time),
        "attributes": attributes_to_json(span.attributes),
        "events": [
            {
                "timeUnixNano": str(event.timestamp),
                "name": event.name,
                "attributes": attributes_to_json(event.attributes),
            }
            for event in span.events
        ],
        "status": {"code": span.status.status_code.value},
    }
    if span.parent is not None and span.parent.span_id:
        body["parentSpanId"] = format(span.parent.span_id, "016x")
    return body


def spans_to_otlp_json(spans: Sequence[ReadableSpan]) -> Dict[str, Any]:
    """
    Build the ``resourceSpans`` request body.

    Spans are grouped by resource, then by instrumentation scope, keeping the
    order in which each group is first seen.
    """
    by_resource: Dict[str, Dict[str, Any]] = {}
    by_scope: Dict[Tuple[str, str, str], List[Dict[str, Any]]] = {}

    for span in spans:
        resource = dict(span.resource.attributes) if span.resource else {}
        resource_key = json.dumps(resource, sort_keys=True, default=str)
        group = by_resource.setdefault(
            resource_key,
            {"resource": {"attributes": attributes_to_json(resource)}, "scopeSpans": []},
        )
        scope = _scope_json(span.instrumentation_scope)
        scope_key = (resource_key, scope["name"], scope["version"])
        if scope_key not in by_scope:
            by_scope[scope_key] = []
            group["scopeSpans"].append({"scope": scope, "spans": by_scope[scope_key]})
        by_scope[scope_key].append(_span_json(span))

    return {"resourceSpans": list(by_resource.values())}


class OTLPJsonMetricExporter(MetricExporter):
    """
    Posts tuning metrics to ``<endpoint>/metrics``.

    Counters and histograms are exported with delta temporality so each
    export carries only the evaluations since the previous one.
    """

    def __init__(
        self,
        endpoint: str,
        headers: Optional[Dict[str, str]] = None,
        timeout: float = 10,
        client: Optional[httpx.Client] = None,
    ):
        super().__init__(preferred_temporality=METRIC_TEMPORALITY)
        self._poster = _JsonPoster(endpoint, "metrics", headers, timeout, client)

    @property
    def endpoint(self) -> str:
        return self._poster.url

    def export(
        self, metrics_data: MetricsData, timeout_millis: float = 10000, **kwargs: Any
    ) -> MetricExportResult:
        if not metrics_data or not metrics_data.resource_metrics:
            return MetricExportResult.SUCCESS
        if self._poster.post(metrics_to_otlp_json(metrics_data)):
            return MetricExportResult.SUCCESS
        return MetricExportResult.FAILURE

    def shutdown(self, timeout_millis: float = 30000, **kwargs: Any) -> None:
        self._poster.close()

    def force_flush(self, timeout_millis: float = 10000) -> bool:
        return True


def _data_point_json(point: Any) -> Dict[str, Any]:
    body: Dict[str, Any] = {
        "startTimeUnixNano": str(getattr(point, "start_time_unix_nano", 0) or 0),
        "timeUnixNano": str(point.time_unix_nano),
        "attributes": attributes_to_json(point.attributes),
    }
    if hasattr(point, "bucket_counts"):
        body["count"] = str(point.count)
        body["sum"] = float(point.sum)
        body["bucketCounts"] = [str(c) for c in point.bucket_counts]
        body["explicitBounds"] = [float(b) for b in point.explicit_bounds]
        body["min"] = float(point.min)
        body["max"] = float(point.max)
    elif isinstance(point.value, int):
        body["asInt"] = str(point.value)
    else:
        body["asDouble"] = float(point.value)
    return body


def _metric_json(metric: Metric) -> Dict[str, Any]:
    data = metric.data
    points = [_data_point_json(p) for p in data.data_points]
    temporality = getattr(data, "aggregation_temporality", None)
    temporality_value = temporality.value if temporality else DELTA_TEMPORALITY
    body: Dict[str, Any] = {
        "name": metric.name,
        "description": metric.description or "",
        "unit": metric.unit or "",
    }
    kind = type(data).__name__
    if kind == "Sum":
        body["sum"] = {
            "dataPoints": points,
            "aggregationTemporality": temporality_value,
            "isMonotonic": bool(getattr(data, "is_monotonic", False)),
        }
    elif kind == "Histogram":
        body["histogram"] = {"dataPoints": points, "aggregationTemporality": temporality_value}
    else:
        body["gauge"] = {"dataPoints": points}
    return body


def metrics_to_otlp_json(metrics_data: MetricsData) -> Dict[str, Any]:
    """Build the ``resourceMetrics`` request body."""
    return {
        "resourceMetrics": [
            {
                "resource": {
                    "attributes": attributes_to_json(rm.resource.attributes if rm.resource else {})
                },
                "scopeMetrics": [
                    {
                        "scope": _scope_json(sm.scope),
                        "metrics": [_metric_json(m) for m in sm.metrics],
                    }
                    for sm in rm.scope_metrics
                ],
            }
            for rm in metrics_data.resource_metrics
        ]
    }
