import { ApiClient } from "./api.js";
import { buildStudio } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
buildStudio(root, new ApiClient());
