#include "bwf/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bwf::io {

namespace {

void dump(const std::string& body, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    out << body;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

} // namespace

std::string format_float(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void export_metrics_csv(const nn::TargetMetrics& metrics, const std::string& path) {
    std::ostringstream body;
    body << "target,mae,rmse,r2\n";
    auto row = [&](const char* name, const Metrics& m) {
        body << name << ',' << format_float(m.mae) << ',' << format_float(m.rmse) << ',';
        if (m.r2) body << format_float(*m.r2);
        body << '\n';
    };
    row("depth", metrics.depth);
    row("kd", metrics.kd);
    row("bottom", metrics.bottom);
    dump(body.str(), path);
}

void export_curves_csv(std::span<const double> train_loss,
                       std::span<const double> val_loss, const std::string& path) {
    if (train_loss.empty()) fail(ErrorCode::EmptyPayload, "no epochs to export");
    if (train_loss.size() != val_loss.size())
        fail(ErrorCode::LengthMismatch, "curve lengths differ");
    std::ostringstream body;
    body << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < train_loss.size(); ++e)
        body << (e + 1) << ',' << format_float(train_loss[e]) << ','
             << format_float(val_loss[e]) << '\n';
    dump(body.str(), path);
}

void export_scatter_csv(std::span<const inv::DepthIntensityPair> pairs,
                        const std::string& path) {
    if (pairs.empty()) fail(ErrorCode::EmptyPayload, "no pairs to export");
    std::ostringstream body;
    body << "depth,log_intensity\n";
    for (const auto& p : pairs)
        body << format_float(p.depth) << ',' << format_float(p.log_intensity) << '\n';
    dump(body.str(), path);
}

void export_predictions_csv(std::span<const nn::Prediction> predictions,
                            const std::string& path) {
    if (predictions.empty()) fail(ErrorCode::EmptyPayload, "no predictions to export");
    std::ostringstream body;
    body << "index,depth,kd,bottom\n";
    for (std::size_t i = 0; i < predictions.size(); ++i)
        body << i << ',' << format_float(predictions[i].depth) << ','
             << format_float(predictions[i].kd) << ','
             << format_float(predictions[i].bottom) << '\n';
    dump(body.str(), path);
}

void export_depths_csv(std::span<const DepthRow> rows, const std::string& path) {
    if (rows.empty()) fail(ErrorCode::EmptyPayload, "no depths to export");
    std::ostringstream body;
    body << "index,depth,depth_true\n";
    for (const auto& r : rows)
        body << r.index << ',' << format_float(r.depth) << ','
             << format_float(r.depth_true) << '\n';
    dump(body.str(), path);
}

} // namespace bwf::io
