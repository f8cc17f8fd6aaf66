from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram
import time
from functools import wraps
from typing import Callable, Dict, Optional
import logging


class MetricsCollector:
    """Prometheus metrics for the control loop.

    Each collector owns its registry so several can coexist in one process
    (tests, worker pools).
    """

    def __init__(self, app_name: str = "diffusion_mpc", registry: Optional[CollectorRegistry] = None):
        self.app_name = app_name
        self.logger = logging.getLogger(__name__)
        self.registry = registry or CollectorRegistry()

        # Counters
        self.projections = Counter(
            f'{app_name}_projections_total',
            'Number of trajectory projections',
            ['status'],
            registry=self.registry
        )
        self.control_steps = Counter(
            f'{app_name}_control_steps_total',
            'Number of control steps',
            ['method'],
            registry=self.registry
        )
        self.episodes = Counter(
            f'{app_name}_episodes_total',
            'Number of finished episodes',
            ['method', 'outcome'],
            registry=self.registry
        )

        # Histograms
        self.step_latency = Histogram(
            f'{app_name}_control_step_duration_seconds',
            'Wall time of one control step',
            buckets=[0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0],
            registry=self.registry
        )

        # Gauges
        self.active_episodes = Gauge(
            f'{app_name}_active_episodes',
            'Episodes currently running',
            registry=self.registry
        )

    def track_time(self, metric: Histogram) -> Callable:
        def decorator(func: Callable) -> Callable:
            @wraps(func)
            def wrapper(*args, **kwargs):
                start_time = time.perf_counter()
                try:
                    return func(*args, **kwargs)
                finally:
                    metric.observe(time.perf_counter() - start_time)
            return wrapper
        return decorator

    def record_projection(self, converged: bool, fallback: bool = False):
        """Record one projection outcome"""
        status = 'converged' if converged else ('fallback' if fallback else 'failed')
        self.projections.labels(status=status).inc()

    def record_control_step(self, method: str, duration: float):
        self.control_steps.labels(method=method).inc()
        self.step_latency.observe(duration)

    def record_episode(self, method: str, outcome: str):
        self.episodes.labels(method=method, outcome=outcome).inc()

    def latency_summary(self) -> Dict[str, float]:
        """Count, total and mean of the control-step histogram"""
        count = self.registry.get_sample_value(f'{self.app_name}_control_step_duration_seconds_count') or 0.0
        total = self.registry.get_sample_value(f'{self.app_name}_control_step_duration_seconds_sum') or 0.0
        return {
            'steps': int(count),
            'total_s': float(total),
            'mean_s': float(total / count) if count else 0.0
        }
