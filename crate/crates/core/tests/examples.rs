macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(euler_top, "euler_top.rs");
example!(heavy_top, "heavy_top.rs");
example!(kozlov_aff1, "kozlov_aff1.rs");
example!(modular_certificate, "modular_certificate.rs");
example!(model_file, "model_file.rs");
example!(beanie_volume, "beanie_volume.rs");
example!(cli_tour, "cli_tour.rs");

#[test]
fn euler_top_runs() {
    euler_top::run_example().expect("euler top example should run");
}

#[test]
fn heavy_top_runs() {
    heavy_top::run_example().expect("heavy top example should run");
}

#[test]
fn kozlov_aff1_runs() {
    kozlov_aff1::run_example().expect("aff1 example should run");
}

#[test]
fn modular_certificate_runs() {
    modular_certificate::run_example().expect("certificate example should run");
}

#[test]
fn model_file_runs() {
    model_file::run_example().expect("model file example should run");
}

#[test]
fn beanie_volume_runs() {
    beanie_volume::run_example().expect("beanie example should run");
}

#[test]
fn cli_tour_runs() {
    cli_tour::run_example().expect("cli tour should run");
}
