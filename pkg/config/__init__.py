from config.run_config import ConfigError, EnvSection, RunConfig, RunSection, load_config

__all__ = ["ConfigError", "EnvSection", "RunConfig", "RunSection", "load_config"]
