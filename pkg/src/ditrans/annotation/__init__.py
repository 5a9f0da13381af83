"""Human annotation workflow: event log, derived state, service, HTTP API."""
