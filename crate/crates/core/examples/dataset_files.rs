// Writing and reading the plain-text interaction format (one `user item`
// pair per line) and splitting a raw interaction list per user.

use graph_diffusion_cf::{load_dataset, random_split, Result};

pub fn run_example() -> Result<()> {
    let interactions: Vec<(usize, usize)> = (0..6).flat_map(|u| (0..5).map(move |i| (u, (u + i) % 8))).collect();
    let ds = random_split(6, 8, &interactions, 0.2, 7)?;
    println!(
        "{} train / {} test interactions, density {:.3}",
        ds.train_edges().len(),
        ds.test_edges().len(),
        ds.density()
    );

    let dir = std::env::temp_dir().join(format!("gdcf-dataset-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| graph_diffusion_cf::Error::Io { path: dir.clone(), source: e })?;
    let (train, test) = (dir.join("train.txt"), dir.join("test.txt"));
    ds.export(&train, &test)?;
    let back = load_dataset(&train, &test)?;
    assert_eq!(back.train_edges(), ds.train_edges());
    println!("user 0: train {:?}, test {:?}", back.train_items(0), back.test_items(0));
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
