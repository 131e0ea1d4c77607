#ifndef AIRTNN_SAMPLE_H_
#define AIRTNN_SAMPLE_H_

#include <Eigen/Dense>

namespace airtnn {

// One labeled edge signal.
struct SourceLocSample {
  Eigen::VectorXd x;
  int label = 0;
  int tau = 0;  // diffusion order used to generate x
};

}  // namespace airtnn

#endif  // AIRTNN_SAMPLE_H_
