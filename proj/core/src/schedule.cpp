#include "pvcast/schedule.hpp"

#include <cmath>
#include <limits>

namespace pvcast {

std::string_view to_string(LrSchedule s) {
  switch (s) {
    case LrSchedule::constant: return "constant";
    case LrSchedule::invscaling: return "invscaling";
    case LrSchedule::adaptive: return "adaptive";
  }
  return "constant";
}

std::optional<LrSchedule> lr_schedule_from_string(std::string_view name) {
  for (auto s : {LrSchedule::constant, LrSchedule::invscaling, LrSchedule::adaptive})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

LearningRate::LearningRate(LrSchedule schedule, double initial, double tolerance)
    : schedule_(schedule),
      initial_(initial),
      tolerance_(tolerance),
      rate_(initial),
      best_loss_(std::numeric_limits<double>::infinity()) {}

void LearningRate::end_epoch(double loss) {
  ++epoch_;
  switch (schedule_) {
    case LrSchedule::constant:
      break;
    case LrSchedule::invscaling:
      rate_ = initial_ / std::sqrt(static_cast<double>(epoch_));
      break;
    case LrSchedule::adaptive:
      if (loss > best_loss_ - tolerance_) {
        if (++bad_epochs_ >= 2) {
          rate_ /= 2.0;
          bad_epochs_ = 0;
        }
      } else {
        bad_epochs_ = 0;
      }
      break;
  }
  if (loss < best_loss_) best_loss_ = loss;
}

bool LearningRate::exhausted() const noexcept { return schedule_ == LrSchedule::adaptive && rate_ < 1e-6; }

}  // namespace pvcast
