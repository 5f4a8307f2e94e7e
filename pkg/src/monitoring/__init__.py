"""
Monitoring and observability package
"""

from .resources import ResourceMonitor, default_worker_count

__all__ = ['ResourceMonitor', 'default_worker_count']
