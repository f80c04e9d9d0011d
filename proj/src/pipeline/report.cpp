#include <rotordiag/pipeline.hpp>

#include <cstdio>
#include <sstream>

namespace rotordiag::pipeline {

std::string percent(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", accuracy * 100.0);
    return buf;
}

namespace {

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

std::string format_eval(const EvalReport& report) {
    std::ostringstream out;
    out << "accuracy: " << percent(report.accuracy()) << " (" << report.correct() << "/" << report.total() << ")\n"
        << "confusion (rows true, columns predicted; unbroken, broken):\n";
    for (const auto& row : report.confusion)
        out << "  " << row[0] << ' ' << row[1] << '\n';
    return out.str();
}

std::string format_report(const TrainReport& report) {
    std::ostringstream out;
    out << "mode: " << report.mode << '\n'
        << "seed: " << report.seed << '\n'
        << "epochs: " << report.config.epochs << '\n'
        << "batch_size: " << report.config.batch_size << '\n'
        << "learning_rate: " << fixed(report.config.learning_rate, 6) << '\n'
        << "train/validation/test: " << report.train_size << '/' << report.validation_size << '/'
        << report.test_size << '\n'
        << "best_epoch: " << report.best_epoch << '\n';
    for (const auto& e : report.epochs)
        out << "epoch " << e.epoch << ": train_loss " << fixed(e.train_loss, 4) << ", train_accuracy "
            << percent(e.train_accuracy) << ", validation_accuracy " << percent(e.validation_accuracy) << '\n';
    if (report.test)
        out << "test " << format_eval(*report.test);
    return out.str();
}

std::string format_epoch_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "epoch,train_loss,train_accuracy,validation_loss,validation_accuracy\n";
    for (const auto& e : report.epochs)
        out << e.epoch << ',' << fixed(e.train_loss, 6) << ',' << fixed(e.train_accuracy * 100.0, 2) << ','
            << fixed(e.validation_loss, 6) << ',' << fixed(e.validation_accuracy * 100.0, 2) << '\n';
    if (report.test)
        out << "test,,,," << fixed(report.test->accuracy() * 100.0, 2) << '\n';
    return out.str();
}

} // namespace rotordiag::pipeline
