"""Generate the API reference pages and their navigation."""

from pathlib import Path

import mkdocs_gen_files

nav = mkdocs_gen_files.Nav()
mod_symbol = '<code class="doc-symbol doc-symbol-nav doc-symbol-module"></code>'

root = Path(__file__).parent.parent
package = root / "src" / "dicut_stream"

# Private modules and the entry point have no public API.
for path in sorted(package.glob("*.py")):
    if path.stem.startswith("_") and path.stem != "__init__":
        continue
    parts = ("dicut_stream",) if path.stem == "__init__" else ("dicut_stream", path.stem)
    doc_path = Path(*parts[1:], "index.md") if path.stem == "__init__" else Path(f"{path.stem}.md")
    nav[tuple(f"{mod_symbol} {part}" for part in parts)] = doc_path.as_posix()

    full_doc_path = Path("reference", doc_path)
    with mkdocs_gen_files.open(full_doc_path, "w") as fd:
        ident = ".".join(parts)
        fd.write(f"---\ntitle: {ident}\n---\n\n::: {ident}")
    mkdocs_gen_files.set_edit_path(full_doc_path, ".." / path.relative_to(root))

with mkdocs_gen_files.open("reference/SUMMARY.md", "w") as nav_file:
    nav_file.writelines(nav.build_literate_nav())
