APP_NAME = "cyclereward"
APP_VERSION = "0.1.0"
