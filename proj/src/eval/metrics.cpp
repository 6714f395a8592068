#include "eval/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dualcycle::eval {

namespace {

struct Counts {
  int64_t intersection = 0;
  int64_t pred = 0;
  int64_t gt = 0;
};

Counts overlap_counts(const torch::Tensor& pred, const torch::Tensor& gt) {
  if (pred.sizes() != gt.sizes()) {
    std::ostringstream os;
    os << "mask shape mismatch: " << pred.sizes() << " vs " << gt.sizes();
    throw std::invalid_argument(os.str());
  }
  auto p = pred > 0;
  auto g = gt > 0;
  Counts c;
  c.intersection = p.logical_and(g).sum().item<int64_t>();
  c.pred = p.sum().item<int64_t>();
  c.gt = g.sum().item<int64_t>();
  return c;
}

}  // namespace

double dice(const torch::Tensor& pred, const torch::Tensor& gt) {
  auto c = overlap_counts(pred, gt);
  if (c.pred + c.gt == 0) return 1.0;
  return 2.0 * static_cast<double>(c.intersection) /
         static_cast<double>(c.pred + c.gt);
}

double jaccard(const torch::Tensor& pred, const torch::Tensor& gt) {
  auto c = overlap_counts(pred, gt);
  const int64_t uni = c.pred + c.gt - c.intersection;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(uni);
}

EvalReport evaluate_split(const ForwardFn& forward,
                          const std::vector<data::SamplePair>& samples,
                          double threshold, const std::string& model_tag,
                          const std::string& split_tag) {
  torch::NoGradGuard no_grad;
  EvalReport report;
  report.model_tag = model_tag;
  report.split_tag = split_tag;
  double sum_d = 0.0, sum_d2 = 0.0, sum_j = 0.0, sum_j2 = 0.0;
  for (const auto& s : samples) {
    torch::Tensor out;
    try {
      out = forward(s.image);
    } catch (const std::exception& e) {
      throw std::runtime_error("evaluation failed on sample '" + s.id +
                               "': " + e.what());
    }
    auto pred = binarize(out, threshold);
    SampleScore score;
    score.id = s.id;
    score.dice = dice(pred, s.mask);
    score.jaccard = jaccard(pred, s.mask);
    sum_d += score.dice;
    sum_d2 += score.dice * score.dice;
    sum_j += score.jaccard;
    sum_j2 += score.jaccard * score.jaccard;
    report.per_sample.push_back(std::move(score));
  }
  report.count = static_cast<int64_t>(report.per_sample.size());
  if (report.count > 0) {
    const double n = static_cast<double>(report.count);
    report.mean_dice = sum_d / n;
    report.mean_jaccard = sum_j / n;
    report.std_dice =
        std::sqrt(std::max(0.0, sum_d2 / n - report.mean_dice * report.mean_dice));
    report.std_jaccard = std::sqrt(
        std::max(0.0, sum_j2 / n - report.mean_jaccard * report.mean_jaccard));
  }
  return report;
}

void export_report(const std::vector<EvalReport>& reports,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::ofstream per_sample(dir / "per_sample.csv");
  per_sample.precision(std::numeric_limits<double>::max_digits10);
  per_sample << "model,split,id,dice,jaccard\n";
  for (const auto& r : reports) {
    for (const auto& s : r.per_sample) {
      per_sample << r.model_tag << ',' << r.split_tag << ',' << s.id << ','
                 << s.dice << ',' << s.jaccard << '\n';
    }
  }

  std::ofstream summary(dir / "summary.csv");
  summary.precision(std::numeric_limits<double>::max_digits10);
  summary << "model,split,count,mean_dice,std_dice,mean_jaccard,std_jaccard\n";
  for (const auto& r : reports) {
    summary << r.model_tag << ',' << r.split_tag << ',' << r.count << ','
            << r.mean_dice << ',' << r.std_dice << ',' << r.mean_jaccard << ','
            << r.std_jaccard << '\n';
  }

  std::ofstream md(dir / "summary.md");
  md << "| Model | Split | n | Dice | JC |\n";
  md << "|---|---|---|---|---|\n";
  md.precision(4);
  for (const auto& r : reports) {
    md << "| " << r.model_tag << " | " << r.split_tag << " | " << r.count
       << " | " << std::fixed << r.mean_dice << " ± " << r.std_dice << " | "
       << r.mean_jaccard << " ± " << r.std_jaccard << " |\n";
  }
}

}  // namespace dualcycle::eval
