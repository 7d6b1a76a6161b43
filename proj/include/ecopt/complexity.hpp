#pragma once

#include "ecopt/ingest.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ecopt {

// RCA and binary specialization matrix for one year.
struct SpecializationSnapshot {
    int year = 0;
    std::vector<std::string> locations;
    std::vector<std::string> activities;
    Eigen::MatrixXd output;     // X_cp
    Eigen::MatrixXd rca;        // R_cp = X_cp X / (X_c X_p)
    Eigen::MatrixXd m;          // 1 where rca >= 1, else 0
    Eigen::VectorXi diversity;  // row sums of m
    Eigen::VectorXi ubiquity;   // column sums of m
};

struct Standardization {
    double mean = 0.0;
    double sd = 1.0;
};

struct ComplexityScores {
    // Standardized PCI from the second eigenvector of the activity operator.
    Eigen::VectorXd pci;
    // Standardized average of pci over each location's specializations.
    Eigen::VectorXd eci;
    // Standardized second eigenvector of the location operator; cross-check only.
    Eigen::VectorXd eci_eigen;
    std::string orientation_anchor;
    Standardization pci_standardization;  // applied to the raw eigenvector
    Standardization eci_standardization;  // applied to the raw averages
    double second_eigenvalue = 0.0;
    // Rows/columns outside the largest connected component; their scores are NaN.
    std::vector<Eigen::Index> dropped_locations;
    std::vector<Eigen::Index> dropped_activities;
};

struct RelatednessField {
    Eigen::MatrixXd phi;        // activity x activity proximity
    Eigen::MatrixXd omega;      // location x activity density
    Eigen::MatrixXd omega_rel;  // omega centered per location
};

// Throws DataError when a location or activity in the slice has zero total.
SpecializationSnapshot compute_rca(const YearSlice& slice);
SpecializationSnapshot compute_rca(const OutputPanel& panel, int year);

Eigen::MatrixXd binarize(const Eigen::MatrixXd& rca);

// PCI/ECI for a binary matrix without all-zero rows or columns. A disconnected
// matrix is scored on its largest component and the rest is reported in
// dropped_*. Throws NumericError on degenerate spectra or zero variance.
ComplexityScores compute_eci_pci(const Eigen::MatrixXd& m);

// sum_p row[p] * pci[p] / sum_p row[p]. Throws DataError for an all-zero row.
double eci_of_row(const Eigen::Ref<const Eigen::VectorXd, 0, Eigen::InnerStride<>>& row,
                  const Eigen::Ref<const Eigen::VectorXd>& pci);

Eigen::MatrixXd compute_proximity(const Eigen::MatrixXd& m);
Eigen::MatrixXd compute_density(const Eigen::MatrixXd& m, const Eigen::MatrixXd& phi);
Eigen::MatrixXd compute_relative_density(const Eigen::MatrixXd& omega);
RelatednessField compute_relatedness(const Eigen::MatrixXd& m);

// Sample mean and sample standard deviation (n - 1).
Standardization sample_moments(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace ecopt
