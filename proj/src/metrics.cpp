#include "cohortsift/metrics.hpp"

#include "cohortsift/error.hpp"

#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace cohortsift {

Metrics metrics_from_confusion(ConfusionMatrix const& cm)
{
    if (cm.total() == 0) throw Error("metrics of an empty confusion matrix");
    Metrics m;
    auto ratio = [&](double num, double den) {
        if (den == 0.0) {
            m.degenerate = true;
            return 0.0;
        }
        return num / den;
    };
    double const tp = static_cast<double>(cm.tp);
    double const fp = static_cast<double>(cm.fp);
    double const fn = static_cast<double>(cm.fn);
    double const tn = static_cast<double>(cm.tn);
    m.accuracy = (tp + tn) / static_cast<double>(cm.total());
    m.recall = ratio(tp, tp + fn);
    m.precision = ratio(tp, tp + fp);
    m.fp_rate = ratio(fp, fp + tn);
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.f2 = ratio(5.0 * m.precision * m.recall, 4.0 * m.precision + m.recall);
    return m;
}

void write_confusion_tsv_header(std::ostream& out)
{
    out << "key\ttp\tfp\tfn\ttn\taccuracy\tprecision\trecall\tf1\tf2\tfp_rate\tdegenerate\n";
}

void write_confusion_tsv_row(std::ostream& out, char const* key, ConfusionMatrix const& cm)
{
    Metrics const m = metrics_from_confusion(cm);
    fmt::print(out, "{}\t{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{}\n", key, cm.tp, cm.fp,
               cm.fn, cm.tn, m.accuracy, m.precision, m.recall, m.f1, m.f2, m.fp_rate, m.degenerate ? 1 : 0);
}

void write_confusion_tsv(std::ostream& out, ConfusionMatrix const& cm)
{
    write_confusion_tsv_header(out);
    write_confusion_tsv_row(out, "all", cm);
}

} // namespace cohortsift
