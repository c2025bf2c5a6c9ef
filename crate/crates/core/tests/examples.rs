macro_rules! example_test {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(compare_encoders, "compare_encoders.rs", compare_encoders_runs);
example_test!(config_runs, "config_runs.rs", config_runs_runs);
example_test!(dataset_files, "dataset_files.rs", dataset_files_runs);
example_test!(diffusion_presets, "diffusion_presets.rs", diffusion_presets_runs);
example_test!(evaluate_ranking, "evaluate_ranking.rs", evaluate_ranking_runs);
example_test!(hetero_graph, "hetero_graph.rs", hetero_graph_runs);
example_test!(homo_graph, "homo_graph.rs", homo_graph_runs);
example_test!(loss_functions, "loss_functions.rs", loss_functions_runs);
example_test!(train_hetero, "train_hetero.rs", train_hetero_runs);
example_test!(verify_identities, "verify_identities.rs", verify_identities_runs);
