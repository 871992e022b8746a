from ksteiner.cli import main

raise SystemExit(main())
