#pragma once

#include <optional>
#include <string_view>

namespace pvcast {

enum class LrSchedule { constant, invscaling, adaptive };

std::string_view to_string(LrSchedule s);
std::optional<LrSchedule> lr_schedule_from_string(std::string_view name);

/// Per-epoch learning rate shared by the MLP and the linear SGD regressor.
///   constant   - initial rate throughout
///   invscaling - initial / sqrt(epoch), epochs counted from 1
///   adaptive   - halved whenever the epoch loss fails to improve on the
///                best loss by `tolerance` for two consecutive epochs
class LearningRate {
 public:
  LearningRate(LrSchedule schedule, double initial, double tolerance);

  double current() const noexcept { return rate_; }
  /// Report the loss of the epoch just finished; updates the rate used for
  /// the next epoch.
  void end_epoch(double loss);
  /// Adaptive schedule only: the rate has decayed below the 1e-6 floor.
  bool exhausted() const noexcept;

 private:
  LrSchedule schedule_;
  double initial_;
  double tolerance_;
  double rate_;
  int epoch_ = 1;
  double best_loss_;
  int bad_epochs_ = 0;
};

}  // namespace pvcast
