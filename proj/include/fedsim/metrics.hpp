#pragma once

#include <vector>

#include "fedsim/nn.hpp"

namespace fedsim {

// ROC-AUC as the Mann-Whitney rank statistic with 0.5 credit for tied
// pairs, computed via one sort. labels are 0/1; both classes must appear,
// otherwise std::invalid_argument (undefined AUC).
double roc_auc_binary(const std::vector<double>& scores,
                      const std::vector<int>& labels);

// Unweighted one-vs-rest mean of per-class AUCs. probabilities is N x C
// row-stochastic (any monotone score works); classes absent from labels
// are skipped with a warning on stderr. Throws if no class has a defined
// AUC.
double macro_ovr_auc(const Matrix& probabilities, const std::vector<int>& labels);

}  // namespace fedsim
