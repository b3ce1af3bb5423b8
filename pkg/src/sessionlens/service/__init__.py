from .app import ApiError, AppState, ServiceConfig, create_app

__all__ = ["ApiError", "AppState", "ServiceConfig", "create_app"]
