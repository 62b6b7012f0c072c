//! Regenerates the shipped fixture files under data/ from fixture.rs.
//! The `shipped_files_match_generator` test enforces that they stay in sync.

use std::fs;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("sd_shell_basis.txt"), litcheb::fixture::basis_file_text()).unwrap();
    fs::write(
        dir.join("sd_fixture_monomials.txt"),
        litcheb::fixture::monomial_file_text(),
    )
    .unwrap();
    fs::write(dir.join("omega_source.txt"), litcheb::fixture::omega_file_text()).unwrap();
    println!("wrote fixture files to {}", dir.display());
}
