"""Reference model responses, one per dialect output format."""

GEMINI_TUBE = '[{"timestamp": "00:30", "box_2d": [100, 200, 300, 400]}]'
GEMINI_TUBE_LATE = '```json\n[{"timestamp": "05:00", "box_2d": [150, 250, 350, 450]}]\n```'
GPT_TUBE = '[{"frame": 3, "box": [0.051, 0.252, 0.323, 0.954]}]'
QWEN_TUBE = '[{"time": 1.0, "bbox_2d": [0, 0, 500, 500]}]'

PLOT_SEGMENT = """{
  "text": "Hello everyone.",
  "start": 62.4,
  "end": 65.0,
  "boxes": [
    {"timestamp": 62.4, "box_2d": [0.400, 0.150, 0.600, 0.350]},
    {"timestamp": 63.0, "box_2d": [0.405, 0.155, 0.605, 0.355]}
  ]
}"""
