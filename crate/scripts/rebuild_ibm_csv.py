"""Rebuild the IBM HR Analytics attrition CSV in its original column layout.

The R `modeldata::attrition` table (redistributed in the `rdatasets` wheel on
PyPI) is the IBM file with ordinal columns re-labelled as factors, the
row names carrying EmployeeNumber, and three constant columns removed.  This
script maps everything back to the original integer codes and category
strings so the output matches the layout of `WA_Fn-UseC_-HR-Employee-Attrition.csv`.

    pip install rdatasets
    python scripts/rebuild_ibm_csv.py data/ibm_hr_attrition.csv
"""

import sys

import rdatasets

LEVEL4 = {"Low": 1, "Medium": 2, "High": 3, "Very_High": 4}
ORDINAL = {
    "Education": {"Below_College": 1, "College": 2, "Bachelor": 3, "Master": 4, "Doctor": 5},
    "EnvironmentSatisfaction": LEVEL4,
    "JobInvolvement": LEVEL4,
    "JobSatisfaction": LEVEL4,
    "RelationshipSatisfaction": LEVEL4,
    "PerformanceRating": {"Low": 1, "Good": 2, "Excellent": 3, "Outstanding": 4},
    "WorkLifeBalance": {"Bad": 1, "Good": 2, "Better": 3, "Best": 4},
}
NOMINAL = {
    "Human_Resources": "Human Resources",
    "Research_Development": "Research & Development",
    "Life_Sciences": "Life Sciences",
    "Technical_Degree": "Technical Degree",
    "Healthcare_Representative": "Healthcare Representative",
    "Laboratory_Technician": "Laboratory Technician",
    "Manufacturing_Director": "Manufacturing Director",
    "Research_Director": "Research Director",
    "Research_Scientist": "Research Scientist",
    "Sales_Executive": "Sales Executive",
    "Sales_Representative": "Sales Representative",
}
COLUMNS = [
    "Age", "Attrition", "BusinessTravel", "DailyRate", "Department",
    "DistanceFromHome", "Education", "EducationField", "EmployeeCount",
    "EmployeeNumber", "EnvironmentSatisfaction", "Gender", "HourlyRate",
    "JobInvolvement", "JobLevel", "JobRole", "JobSatisfaction", "MaritalStatus",
    "MonthlyIncome", "MonthlyRate", "NumCompaniesWorked", "Over18", "OverTime",
    "PercentSalaryHike", "PerformanceRating", "RelationshipSatisfaction",
    "StandardHours", "StockOptionLevel", "TotalWorkingYears",
    "TrainingTimesLastYear", "WorkLifeBalance", "YearsAtCompany",
    "YearsInCurrentRole", "YearsSinceLastPromotion", "YearsWithCurrManager",
]


def main(out):
    df = rdatasets.data("modeldata", "attrition")
    df = df.rename(columns={"rownames": "EmployeeNumber"})
    for col, codes in ORDINAL.items():
        df[col] = df[col].map(codes)
        assert df[col].notna().all(), col
    for col in ["Department", "EducationField", "JobRole"]:
        df[col] = df[col].map(lambda v: NOMINAL.get(v, v))
    df["EmployeeCount"] = 1
    df["Over18"] = "Y"
    df["StandardHours"] = 80
    df[COLUMNS].to_csv(out, index=False, lineterminator="\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/ibm_hr_attrition.csv")
