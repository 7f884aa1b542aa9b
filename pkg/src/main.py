import sys

from src.core.plate_app import PlateApp

app = PlateApp()

def main() -> None:
    sys.exit(app.run())

if __name__ == "__main__":
    main()
