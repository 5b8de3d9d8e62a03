# OffWoS backend package
