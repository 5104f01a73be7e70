"""tfwave-lab 애플리케이션 계층 (설정, 로깅, CLI)"""
