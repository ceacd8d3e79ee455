# Copyright 2026 The semhyper authors
# Licensed under the MIT license

from .cli import main

if __name__ == "__main__":
    main()
