from isingqb.cli import main

raise SystemExit(main())
