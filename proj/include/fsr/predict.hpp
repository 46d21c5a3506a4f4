#pragma once

#include <variant>

#include "fsim.hpp"
#include "impact.hpp"
#include "plm.hpp"

namespace fsr {

using FitResult = std::variant<FsimFit, SfplFit, ImpactFit>;

inline std::string fit_kind(const FitResult& fit) {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, FsimFit>) return "fsim";
            else if constexpr (std::is_same_v<T, SfplFit>) return f.single_index ? "sfplsim" : "sfplm";
            else return f.algorithm;
        },
        fit);
}

/// Stored fitted values (the train.2 sample for two-step impact fits).
inline const Vector& fitted_values(const FitResult& fit) {
    return std::visit([](const auto& f) -> const Vector& { return f.fitted; }, fit);
}

/// One report per prediction, two (3a, 3b) for impact option 3.
/// `new_z` is ignored by the single-index model and may be empty there.
inline std::vector<PredictionReport> predict_any(const FitResult& fit, const std::optional<FunctionalSample>& new_x,
                                                 const Matrix& new_z, const std::optional<Vector>& y_test,
                                                 int option = 1) {
    return std::visit(
        [&](const auto& f) -> std::vector<PredictionReport> {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, FsimFit>) {
                if (option != 1) throw InvalidArgument("functional single-index prediction supports option 1 only");
                if (!new_x) throw InvalidArgument("prediction needs new curves");
                return {fsim_predict(f, *new_x, y_test)};
            } else if constexpr (std::is_same_v<T, SfplFit>) {
                if (!new_x) throw InvalidArgument("prediction needs new curves");
                return {plm_predict(f, *new_x, new_z, y_test, option)};
            } else {
                return impact_predict(f, new_x, new_z, y_test, option);
            }
        },
        fit);
}

}  // namespace fsr
