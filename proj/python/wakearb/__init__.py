"""Competitive wake-word arbitration: deterministic simulator, calibration and scoring."""

from ._wakearb import (
    CalibrationError,
    CalibrationMatrix,
    CalibrationResult,
    CodecError,
    ConfigError,
    ExperimentResult,
    ProtocolError,
    Scenario,
    SceneError,
    Waveform,
    calibrate,
    corpus_ids,
    decide,
    decode_wire_log,
    detection_probability,
    doa_variance,
    is_corpus_id,
    joint_scores,
    load_calibration_file,
    load_scenario_file,
    measure_energy,
    parse_scenario,
    read_wav,
    run_experiment,
    serialize_scenario,
    synth_playback_bed,
    synth_wake_word,
    write_scenario_file,
    write_wav,
)

__all__ = [
    "CalibrationError",
    "CalibrationMatrix",
    "CalibrationResult",
    "CodecError",
    "ConfigError",
    "ExperimentResult",
    "ProtocolError",
    "Scenario",
    "SceneError",
    "Waveform",
    "calibrate",
    "corpus_ids",
    "decide",
    "decode_wire_log",
    "detection_probability",
    "doa_variance",
    "is_corpus_id",
    "joint_scores",
    "load_calibration_file",
    "load_scenario_file",
    "measure_energy",
    "parse_scenario",
    "read_wav",
    "run_experiment",
    "serialize_scenario",
    "synth_playback_bed",
    "synth_wake_word",
    "write_scenario_file",
    "write_wav",
]
