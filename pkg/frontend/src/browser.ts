/** Side-effect entry module loaded by index.html. */

import { main } from "./app.js";

main();
