"""Telemetry management for tuning sessions."""

import base64
import logging
import sys
import time
from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator, Optional

from opentelemetry import trace
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import (
    ConsoleMetricExporter,
    MetricExporter,
    PeriodicExportingMetricReader,
)
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import (
    BatchSpanProcessor,
    ConsoleSpanExporter,
    SimpleSpanProcessor,
    SpanExporter,
)
from opentelemetry.sdk.trace.sampling import TraceIdRatioBased
from opentelemetry.semconv.resource import ResourceAttributes

from gridtune import __version__
from gridtune.config import ConfigValidator
from gridtune.json_exporter import OTLPJsonMetricExporter, OTLPJsonSpanExporter
from gridtune.types import TelemetryConfig
from gridtune.utils import generate_uuid, get_runtime_info

logger = logging.getLogger(__name__)

SESSION_ID_ATTRIBUTE = "tuning.session.id"


def otlp_headers(config: TelemetryConfig) -> Dict[str, str]:
    """HTTP headers carrying the configured exporter credentials."""
    headers: Dict[str, str] = {}
    auth = config.exporter_auth
    if auth is None:
        return headers
    if auth.type == "bearer":
        if not auth.token:
            raise ValueError("Bearer token is required for bearer authentication")
        headers["Authorization"] = f"Bearer {auth.token}"
    elif auth.type == "apiKey":
        if not auth.api_key:
            raise ValueError("API key is required for apiKey authentication")
        headers["X-API-Key"] = auth.api_key
    elif auth.type == "basic":
        if not auth.username or not auth.password:
            raise ValueError("Username and password are required for basic authentication")
        credentials = f"{auth.username}:{auth.password}"
        headers["Authorization"] = f"Basic {base64.b64encode(credentials.encode()).decode()}"
    return headers


class TelemetryManager:
    """
    Tracer and meter for one tuning session.

    Providers belong to the manager rather than to the global OpenTelemetry
    state, so several managers can coexist in one process. With exporter type
    ``none`` spans and metrics are still produced but never exported.
    """

    def __init__(
        self,
        config: Optional[TelemetryConfig] = None,
        span_exporter: Optional[SpanExporter] = None,
        metric_exporter: Optional[MetricExporter] = None,
    ):
        """
        Initialize the telemetry manager.

        Args:
            config: Telemetry configuration, disabled export when omitted
            span_exporter: Exporter overriding the configured span exporter
            metric_exporter: Exporter overriding the configured metric exporter
        """
        self.config = config or TelemetryConfig()
        ConfigValidator.validate_telemetry(self.config)

        self.session_id = generate_uuid()
        self.session_start = time.time()

        resource = Resource(
            attributes={
                ResourceAttributes.SERVICE_NAME: self.config.service_name,
                ResourceAttributes.SERVICE_VERSION: __version__,
                SESSION_ID_ATTRIBUTE: self.session_id,
                **get_runtime_info(),
            }
        )

        self._tracer_provider = self._init_tracing(resource, span_exporter)
        self._meter_provider = self._init_metrics(resource, metric_exporter)
        self.tracer = self._tracer_provider.get_tracer("gridtune", __version__)
        self.meter = self._meter_provider.get_meter("gridtune", __version__)
        self._is_shutdown = False

    def _init_tracing(
        self, resource: Resource, exporter: Optional[SpanExporter]
    ) -> TracerProvider:
        provider = TracerProvider(
            resource=resource, sampler=TraceIdRatioBased(self.config.sampling_rate)
        )
        if exporter is not None:
            provider.add_span_processor(SimpleSpanProcessor(exporter))
        elif self.config.exporter_type == "console":
            provider.add_span_processor(BatchSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
        elif self.config.exporter_type == "otlp-http":
            assert self.config.exporter_endpoint is not None
            provider.add_span_processor(
                BatchSpanProcessor(
                    OTLPJsonSpanExporter(
                        endpoint=self.config.exporter_endpoint, headers=otlp_headers(self.config)
                    )
                )
            )
        return provider

    def _init_metrics(
        self, resource: Resource, exporter: Optional[MetricExporter]
    ) -> MeterProvider:
        if exporter is None:
            if self.config.exporter_type == "console":
                exporter = ConsoleMetricExporter(out=sys.stderr)
            elif self.config.exporter_type == "otlp-http":
                assert self.config.exporter_endpoint is not None
                exporter = OTLPJsonMetricExporter(
                    endpoint=self.config.exporter_endpoint, headers=otlp_headers(self.config)
                )
        if exporter is None:
            return MeterProvider(resource=resource)

        reader = PeriodicExportingMetricReader(
            exporter,
            export_interval_millis=self.config.metric_export_interval_ms,
            export_timeout_millis=self.config.batch_timeout_ms,
        )
        return MeterProvider(resource=resource, metric_readers=[reader])

    @contextmanager
    def start_span(
        self, name: str, attributes: Optional[Dict[str, Any]] = None
    ) -> Iterator[trace.Span]:
        """Run a block inside a span tagged with the session id."""
        with self.tracer.start_as_current_span(
            name, attributes=self._with_session_id(attributes)
        ) as span:
            yield span

    def get_histogram(self, name: str, description: str, unit: str) -> Callable[..., None]:
        """
        Get a histogram metric.

        Returns:
            Function to record histogram values
        """
        histogram = self.meter.create_histogram(name=name, description=description, unit=unit)

        def record(value: float, attributes: Optional[Dict[str, Any]] = None) -> None:
            histogram.record(value, attributes=self._with_session_id(attributes))

        return record

    def get_increment_counter(self, name: str, description: str, unit: str) -> Callable[..., None]:
        """
        Get a counter metric.

        Returns:
            Function to increment the counter
        """
        counter = self.meter.create_counter(name=name, description=description, unit=unit)

        def increment(value: int = 1, attributes: Optional[Dict[str, Any]] = None) -> None:
            counter.add(value, attributes=self._with_session_id(attributes))

        return increment

    def _with_session_id(self, data: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        return {SESSION_ID_ATTRIBUTE: self.session_id, **(data or {})}

    def shutdown(self) -> None:
        """Record the session duration, flush and close both providers."""
        if self._is_shutdown:
            return
        self._is_shutdown = True
        record = self.get_histogram("tuning.session.duration", "Tuning session duration", "s")
        record(time.time() - self.session_start)
        self._tracer_provider.shutdown()
        self._meter_provider.shutdown()
        logger.debug("telemetry session %s shut down", self.session_id)
