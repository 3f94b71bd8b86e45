#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qbheat/field.hpp"
#include "qbheat/masking.hpp"
#include "qbheat/predictor.hpp"

namespace qbheat {

struct FitConfig {
    double ridge = 1e-8;
    int max_steps = 5000;
    double step_size = 1e-2;
    double stop_tol = 1e-12;  ///< stop once |loss change| between steps falls below this
    double collapse_variance_tol = 1e-10;
    double collapse_norm_tol = 1e-8;
    bool standardize = false;  ///< divide the batch by its overall standard deviation first
    int trace_every = 100;     ///< record (step, loss, energy ratio) every n steps; 0 disables
};

void validate(const FitConfig& config);

struct CollapseFlags {
    bool field_collapsed = false;
    bool model_collapsed = false;
};

struct TracePoint {
    int step;
    double loss;
    double energy_ratio;  ///< NaN while E(B) = 0
};

struct FitReport {
    LinearModelSet models;
    std::string method;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<DirectionMse> per_direction;
    std::size_t sample_count = 0;
    CollapseFlags collapse;
    std::string scale_tag;
    int steps = 0;
    std::vector<TracePoint> trace;
    std::vector<QuarterLayout> layouts;  ///< distinct layouts seen in the batch
    FitConfig config;
};

/// Horizontal (or vertical) pairs of a batch oriented along +x (+y): a left
/// pair contributes (target, source). Columns are cells, rows channels.
struct PairData {
    Matrix source;
    Matrix target;
};
PairData collect_pairs(const std::vector<FeatureField>& fields, const std::vector<QuarterLayout>& layouts, Axis axis);

struct BatchLoss {
    double total = 0.0;
    std::vector<DirectionMse> per_direction;
};

/// Masked-prediction MSE over a batch, pooled per direction.
BatchLoss masked_loss(const std::vector<FeatureField>& fields, const std::vector<QuarterLayout>& layouts,
                      const LinearModelSet& models);

CollapseFlags detect_collapse(const std::vector<FeatureField>& fields, const LinearModelSet* models,
                              const FitConfig& config);

/// Least-squares estimate of the one-offset maps M_x, M_y from horizontal and
/// vertical pairs, then A = (M_x − I)/dx, B = (M_y − I)/dy. Diagonal pairs
/// are only scored. All layouts must share one prediction scale.
FitReport fit_closed_form(const std::vector<FeatureField>& fields, const std::vector<QuarterLayout>& layouts,
                          const FitConfig& config = {});

/// Full-batch gradient descent on the total masked MSE over every applicable
/// direction, training all explicit matrices of `init`. Returns the
/// best-loss iterate.
FitReport fit_iterative(const std::vector<FeatureField>& fields, const std::vector<QuarterLayout>& layouts,
                        const LinearModelSet& init, const FitConfig& config = {});

struct CellModels {
    Matrix a;
    Matrix b;
    double spacing;
};

/// Undoes the layout offset: a model with I + dx·A = (I + s·A_cell)^n over
/// n = dx_cells grid steps gives A_cell through the principal n-th root,
/// likewise for B. On discrete-mode data these are the generator's A, B.
CellModels cell_models(const LinearModelSet& models, std::size_t dx_cells, std::size_t dy_cells);

enum class FitMethod { closed_form, iterative, closed_form_then_iterative };

/// Partitions the batch by scale (center → "quarter", corners → "half")
/// and fits each group separately. Reports come back quarter first.
std::vector<FitReport> fit_multiscale(const std::vector<FeatureField>& fields,
                                      const std::vector<QuarterLayout>& layouts, const FitConfig& config,
                                      FitMethod method, int variant = 2);

}  // namespace qbheat
