#include "ctxkg/assoc.hpp"
#include "ctxkg/tsv.hpp"

#include <fmt/format.h>

namespace ctxkg {

GwasStats read_gwas_tsv(const std::filesystem::path& path) {
  GwasStats stats;
  for (const auto& r : read_tsv(path)) {
    if (r.size() != 6) throw InputError(path, "expected variant_id, chrom, pos, chi2, p, ld_score");
    GwasRecord rec{r[0], r[1], parse_int(r[2], path), parse_double(r[3], path), parse_double(r[4], path),
                   parse_double(r[5], path)};
    if (!(rec.chi2 >= 0.0)) throw InputError(path, fmt::format("negative chi2 for {}", rec.variant_id));
    if (!(rec.p > 0.0 && rec.p <= 1.0)) throw InputError(path, fmt::format("p outside (0, 1] for {}", rec.variant_id));
    stats.push_back(std::move(rec));
  }
  sort_canonical(stats);
  return stats;
}

std::string gwas_to_tsv(const GwasStats& stats) {
  std::string s = "# variant_id\tchrom\tpos\tchi2\tp\tld_score\n";
  for (const auto& r : stats)
    s += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.variant_id, r.chrom, r.pos, format_double(r.chi2), format_double(r.p),
                     format_double(r.ld_score));
  return s;
}

std::string loci_to_tsv(const std::vector<Locus>& loci) {
  std::string s = "# rank\tlead_variant\tchrom\tpos\tlead_p\tn_members\n";
  for (std::size_t i = 0; i < loci.size(); ++i)
    s += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", i + 1, loci[i].lead_variant, loci[i].chrom, loci[i].pos,
                     format_double(loci[i].lead_p), loci[i].members.size());
  return s;
}

std::vector<PredictionRow> read_predictions_tsv(const std::filesystem::path& path) {
  std::vector<PredictionRow> rows;
  for (const auto& r : read_tsv(path)) {
    if (r.size() != 2) throw InputError(path, "expected variant_id, predicted_chi2");
    rows.push_back({r[0], parse_double(r[1], path)});
  }
  return rows;
}

std::string predictions_to_tsv(const std::vector<PredictionRow>& rows) {
  std::string s = "# variant_id\tpredicted_chi2\n";
  for (const auto& r : rows) s += fmt::format("{}\t{}\n", r.variant_id, format_double(r.predicted));
  return s;
}

}  // namespace ctxkg
