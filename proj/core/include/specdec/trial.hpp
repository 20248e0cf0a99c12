#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specdec {

/// One recorded (or synthesized) trial: a channels x samples matrix plus its
/// class label and recording context. Labels are 1-based, matching target
/// numbering in the task.
struct TrialRecord {
    Eigen::MatrixXd samples;
    int label = 1;
    std::vector<double> depth_vector;  // millimeters, one per channel
    std::string session_id;
    std::string trial_id;
    std::string edc_id;

    Eigen::Index num_channels() const { return samples.rows(); }
    Eigen::Index num_samples() const { return samples.cols(); }
};

/// Throws ParameterError when any TrialRecord invariant is broken.
void validate(const TrialRecord& trial, int num_classes);

}  // namespace specdec
