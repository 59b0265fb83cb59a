//! Close the loop between the mass-action simulator and the learning stack:
//! datasets built from simulated steady states (instead of the analytic
//! composition map) train the modular model to the same module-error
//! tolerance.

use modid::composition::{Dataset, Provenance, UniModularInputSet};
use modid::config::GroundTruth;
use modid::hill::HillFunction;
use modid::nnet::Mlp;
use modid::rre::{
    qssa_reduce, steady_state, RreParameters, SteadyStateMethod, SteadyStateOptions,
};
use modid::train::{train_modular, ModularModel, TrainOptions};

/// The reduced module function `f(u) = scale * regulator(u)` is itself a Hill
/// curve with scaled amplitude and basal level.
fn scaled_regulator(regulator: &HillFunction, scale: f64) -> HillFunction {
    HillFunction::new(
        regulator.kind,
        scale * regulator.amplitude,
        regulator.half_point,
        regulator.coefficient,
        scale * regulator.basal,
    )
    .expect("scaling preserves validity")
}

#[test]
fn simulated_steady_states_train_the_modular_model() {
    let params = RreParameters::default_single();
    let reduced = qssa_reduce(&params).expect("reduction");
    let input_set = UniModularInputSet::unit(1);
    let opts = SteadyStateOptions::default();

    let inputs = input_set.sample(100, 5);
    let mut outputs = Vec::with_capacity(inputs.len());
    for u in &inputs {
        let state = steady_state(&params, u, SteadyStateMethod::Newton, &opts).expect("solve");
        outputs.push(state.outputs());
    }
    let data = Dataset { inputs, outputs, provenance: Provenance::Unimodular };

    // The simulator's steady states follow the composed form with the reduced
    // module function; express that as a ground truth for the trainer.
    let truth = GroundTruth {
        functions: vec![scaled_regulator(&params.modules[0].regulator, reduced.f_scale[0])],
        theta: reduced.theta.clone(),
        input_set,
        seed: 5,
    };
    for (u, y) in data.inputs.iter().zip(data.outputs.iter()) {
        let analytic = truth.global_output(u).unwrap();
        assert!(
            (y[0] - analytic[0]).abs() <= 1e-9 * analytic[0],
            "simulated output {} vs analytic {}",
            y[0],
            analytic[0]
        );
    }

    let net = Mlp::kaiming(&[1, 20, 20, 20, 20, 1], 6).unwrap();
    let mut model = ModularModel::with_fixed_theta(vec![net], truth.theta.clone()).unwrap();
    let opts = TrainOptions { epochs: 1000, learning_rate: 0.1, log_stride: 100 };
    let records = train_modular(&mut model, &data, &truth, &opts).expect("training");
    let final_e_f = records.last().unwrap().max_e_f();
    assert!(
        final_e_f < 0.05,
        "module function error {final_e_f} should reach the analytic-data tolerance"
    );
}
