from owncash.cli import main

raise SystemExit(main())
